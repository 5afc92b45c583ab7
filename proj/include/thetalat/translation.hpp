#pragma once

#include "thetalat/lattice.hpp"

#include <optional>
#include <string>
#include <vector>

namespace thetalat {

struct MinimizerReport {
    std::vector<Vector> minimizers;  // lattice coordinates in [0,1)^d, sorted
    double value = 0.0;              // theta_{L+u}(alpha) at the first minimizer
    double alpha = 0.0;
    double resolution = 0.0;         // finest grid spacing, 1 / (grid_n 4^rounds)
    int precision_digits = 16;       // working precision of the final ranking
};

struct ArgminOptions {
    bool polish = true;               // Newton polish and extended-precision ranking after the grid stage
    int max_polish_starts = 256;
    std::size_t max_band = 65536;     // survivors kept per refinement round
};

// Grid search for the minimizers of u -> theta_{L+u}(alpha) over the fundamental cell.
MinimizerReport argmin_shift_grid(const BravaisLattice& lattice, double alpha, int grid_n, int refine_rounds,
                                  const ArgminOptions& opts = {});

// Values on the n^d grid j/n (row-major, last coordinate fastest) of an increasing affine image of
// u -> theta_{L+u}(alpha). The map is the identity in the direct regime.
std::vector<double> shift_profile_grid(const BravaisLattice& lattice, double alpha, int grid_n);

// theta_{L+x}(alpha) - theta_{L+y}(alpha) without the cancellation of the constant dual term.
double theta_shift_difference(const BravaisLattice& lattice, const Vector& x, const Vector& y, double alpha);

// Smallest alpha on a 50-point log grid of [alpha_lo, alpha_hi] from which theta at the deep hole stays
// <= theta at x; alpha_lo defaults to alpha_hi / 1000. x is Cartesian.
std::optional<double> deep_hole_crossing(const BravaisLattice& lattice, const Vector& x, double alpha_hi,
                                         double alpha_lo = 0.0);

enum class AsymptoticCase { Triangular, RhombicC1Four, GenericC2Small, GenericQuarter };
std::string to_string(AsymptoticCase c);

struct ClassificationResult {
    AsymptoticCase case_label = AsymptoticCase::GenericC2Small;
    std::vector<Vector> C;   // lattice coordinates in [0,1)
    int deciding_shell = 1;  // index of the dual shell that fixed C (shell 1 is the shortest non-zero one)
    int c1_size = 0;
    int c2_size = 0;         // vectors of the deciding shell outside Z b1, generic cases only
    double canonical_x = 0.0;  // height of b2 over |b1|^2 after scaling b1 to (1,0), generic cases only
    std::string subcase;
};

ClassificationResult classify_asymptotic_2d(const BravaisLattice& lattice);

struct DecidingLayerResult {
    int layer_index = 0;                             // last layer that changed the survivor set
    std::vector<std::vector<Vector>> survivor_sets;  // per layer, lattice coordinates
    std::vector<Vector> refined;                     // survivors after the two x4 refinements
};

// Successive restriction of the grid to the minimizers of each dual shell's cosine sum.
DecidingLayerResult deciding_layer_2d(const BravaisLattice& lattice, int max_layers, int grid_n = 512);

}  // namespace thetalat
