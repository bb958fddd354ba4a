#pragma once

#include <string>

namespace forge {

enum class TaskKind { Classification, Sequence };

// Task identity plus its slice of the shared output vocabulary. The
// specifier indexes the task-embedding table; the metric follows the
// kind (accuracy for classification, token error rate for sequence).
struct TaskSpec {
    std::string id;
    int specifier = 0;
    TaskKind kind = TaskKind::Classification;
    int target_offset = 0;  // first vocab id owned by this task
    int target_count = 0;   // label count, or token alphabet size
    int upsample = 1;       // mixture-training repetition factor
};

}  // namespace forge
