#pragma once

// Umbrella header: fixed-point inference over contractive equilibrium cells
// and streaming warm-start evaluation on synthetic input sequences.

#include "eqstream/bench.hpp"
#include "eqstream/cell.hpp"
#include "eqstream/linalg.hpp"
#include "eqstream/rng.hpp"
#include "eqstream/sequence.hpp"
#include "eqstream/solver.hpp"
#include "eqstream/stream.hpp"
#include "eqstream/svg.hpp"
#include "eqstream/textio.hpp"
