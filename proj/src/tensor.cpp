#include "pcq/tensor.hpp"

namespace pcq {

Tensor4 to_tensor(const VoxelGrid& grid) {
    Tensor4 t(1, grid.size, grid.size, grid.size);
    t.values = grid.values;
    return t;
}

}  // namespace pcq
