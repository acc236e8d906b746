#pragma once

#include "privperturb/design.hpp"

namespace privperturb::detail {

/// Adds z, K (with mirrored K_SI entries tied by equalities), W1, W2, the
/// nuclear block [[W1, D(z) + F K], [., W2]] and the block (1 - eps) I + K_SI.
/// Diagonal entries of W1 and W2 cost `c`.
PencilSdp pencil_sdp_core(const LinearSystem& sys, const ReleaseMap& rel, double c, double eps);

}  // namespace privperturb::detail
