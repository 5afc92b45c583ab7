#pragma once

#include "thetalat/lattice.hpp"
#include "thetalat/theta_sum.hpp"

#include <string>
#include <vector>

namespace thetalat {

struct ShiftAlphabet {
    int dim_base = 0;
    std::vector<Vector> vectors;  // the set H, pairwise distinct
};
void validate(const ShiftAlphabet& h);

struct ShiftSequence {
    int period = 1;
    std::vector<int> indices;  // one period of s, entries index the alphabet
};

// Layers k t e_d + l (s(k) + base), k in Z.
struct LayeredConfig {
    BravaisLattice base;
    ShiftAlphabet alphabet;
    ShiftSequence sequence;
    double spacing_t = 1.0;
    double scale_l = 1.0;
};
void validate(const LayeredConfig& cfg);

// a = 0, b = (1/2, 1/(2 sqrt 3)), c = (0, 1/sqrt 3) over the unit triangular lattice.
ShiftAlphabet triangular_alphabet();

// fcc and bcc: period-3 sequence over {a,b,c}; hcp: period 2 over {a,b} with the fcc spacing and scale.
LayeredConfig preset_layered(const std::string& name, bool unit_density);

// Average Gaussian energy per point of the layered configuration.
ThetaResult layered_theta(const LayeredConfig& cfg, double alpha, double rtol = 1e-13);

// theta(b) - theta(a) for two sequences over the same base, alphabet, t and l, in the form
// sum over k != 0 of exp(-pi alpha k^2 t^2) (m_k(a) - m_k(b)) (theta_0 - theta_1). This needs every non-zero
// shift difference to give the same layer theta theta_1; that is checked and a violation throws. The factor
// theta_0 - theta_1 comes from theta_gap, so the result stays relatively accurate at small alpha.
ThetaResult layered_theta_gap(const LayeredConfig& a, const LayeredConfig& b, double alpha, double rtol = 1e-13);

// Sorted distinct squared distances from the layer-0 origin to the other points of the configuration.
std::vector<double> layered_shell_norms(const LayeredConfig& cfg, int count, double rel_tol = 1e-9);

// Finite-radius necessary condition for base and H having the same symmetries.
bool same_symmetries_check(const BravaisLattice& base, const ShiftAlphabet& alphabet, double radius);

// Fraction of (h, +/-) pairs over one period with s(h +/- k) != s(h).
double mismatch_fraction(const ShiftSequence& seq, int k);

// Exhaustive successive maximization of m_1, m_2, ..., m_depth over all sequences of the given period,
// reported modulo cyclic shift and relabelling of the alphabet.
std::vector<ShiftSequence> greedy_A_conditions(int alphabet_size, int period, int depth);

// Relabel by first occurrence and take the smallest rotation.
ShiftSequence canonical_form(const ShiftSequence& seq);
// True when seq repeats a bijection onto the whole alphabet.
bool is_bijection_pattern(const ShiftSequence& seq, int alphabet_size);

}  // namespace thetalat
