#include "simgap/kernels.hpp"

#include "simgap/errors.hpp"

namespace simgap::kernels {

float cosine_similarity(std::span<const float> a, std::span<const float> b) {
    require(a.size() == b.size(), Errc::dim_mismatch,
            "cosine_similarity: dimension mismatch");
    return similarity_from_dot(dot_accumulate(a.data(), b.data(), a.size()));
}

} // namespace simgap::kernels
