#pragma once

#include <functional>
#include <vector>

#include "ppush/core/tensor.hpp"

namespace ppush {

struct Batch {
  Tensor x;  // [batch x d_in]
  Tensor y;  // [batch x d_out]
};

/// Ordered list of minibatches; iterating it once is one epoch.
using Dataset = std::vector<Batch>;
using DatasetFactory = std::function<Dataset()>;

}  // namespace ppush
