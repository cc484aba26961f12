#pragma once

// Exponentially fading memory (EFM) signatures: truncated tensor-algebra
// arithmetic, exact signatures of piecewise-linear paths, expected signatures
// of time-augmented Brownian motion, linear-functional calculus, and a Monte
// Carlo laboratory.

#include "efm/elastic_net.hpp"
#include "efm/exp_poly.hpp"
#include "efm/expectation.hpp"
#include "efm/io.hpp"
#include "efm/ito.hpp"
#include "efm/lab.hpp"
#include "efm/path.hpp"
#include "efm/projected_stream.hpp"
#include "efm/rates.hpp"
#include "efm/regression.hpp"
#include "efm/riccati.hpp"
#include "efm/rng.hpp"
#include "efm/segment.hpp"
#include "efm/sim.hpp"
#include "efm/stream.hpp"
#include "efm/tensor.hpp"
#include "efm/words.hpp"

namespace efm {
inline constexpr const char* version = "0.1.0";
}
