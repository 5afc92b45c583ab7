#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace thetalat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

// Lambda = basis * Z^dim; columns of the basis are the generators.
class BravaisLattice {
public:
    explicit BravaisLattice(Matrix basis);

    int dim() const { return static_cast<int>(basis_.cols()); }
    const Matrix& basis() const { return basis_; }
    const Matrix& gram() const { return gram_; }
    double covolume() const { return covolume_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

    Vector to_cartesian(const Vector& coords) const { return basis_ * coords; }
    Vector to_coords(const Vector& x) const { return inverse_ * x; }

    // x reduced modulo the lattice so that its coordinates lie in [0,1).
    Vector reduce_to_cell(const Vector& x) const;
    bool contains(const Vector& x, double tol = 1e-9) const;

    BravaisLattice scaled(double factor) const { return BravaisLattice(basis_ * factor); }

private:
    Matrix basis_;
    Matrix gram_;
    Matrix inverse_;
    double covolume_ = 0.0;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
};

struct Shell {
    double sq_norm = 0.0;
    std::vector<Vector> points;     // p - center, sorted lexicographically
    std::vector<IntVector> coeffs;  // integer coordinates of p, same order
};

struct IwasawaQDT {
    Matrix q;
    Vector d_diag;  // product 1
    Matrix t_lower;
    double scale = 1.0;             // |det M|^{1/dim}
    bool last_column_negated = false;  // set when det M < 0: the factors reproduce M with its last column negated
};

// Unit-density piling constants of the triangular stackings.
struct PilingConstants {
    static double t_bcc();
    static double l_bcc();
    static double t_fcc();
    static double l_fcc();
};

// Presets: Zd[d], A2[side], D3[], FCC[], BCC[], Ly[y], Lyt[y,t], rhombic[a,b].
BravaisLattice make_preset(const std::string& name, const std::vector<double>& params = {});

BravaisLattice dual(const BravaisLattice& lattice);
BravaisLattice normalize_density(const BravaisLattice& lattice);
IwasawaQDT iwasawa_qdt(const Matrix& m);

std::vector<Shell> enumerate_shells(const BravaisLattice& lattice, const Vector& center, int count,
                                    double rel_tol = 1e-9);

// Lagrange-Gauss reduction; |v1| <= |v2| and |v1.v2| <= |v1|^2/2.
BravaisLattice reduce_2d(const BravaisLattice& lattice);
// Same reduction, also returning the unimodular U with reduced = basis * U.
BravaisLattice reduce_2d(const BravaisLattice& lattice, Eigen::Matrix2i& unimodular);

struct DeepHoles {
    std::vector<Vector> points;  // Cartesian, inside the fundamental cell of the input basis
    double distance = 0.0;
};
DeepHoles deep_holes_2d(const BravaisLattice& lattice);

// Squared distance from x to the nearest lattice point.
double nearest_sq_distance(const BravaisLattice& lattice, const Vector& x);

// `preset:NAME[:p1,p2,...]` or a JSON object {"basis": [[row],[row],...]} whose columns are the generators.
BravaisLattice parse_lattice_spec(const std::string& spec);

}  // namespace thetalat
