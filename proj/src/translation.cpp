#include "thetalat/translation.hpp"

#include "thetalat/enumerate.hpp"
#include "thetalat/theta_sum.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace thetalat {

namespace {

namespace mp = boost::multiprecision;
using Big = mp::mpfr_float;

constexpr double kPi = std::numbers::pi;
constexpr double kLn10 = std::numbers::ln10;

bool poisson_regime(const BravaisLattice& lattice, double alpha) { return alpha * lattice.lambda_min() < 1.0; }

double to_double(double x) { return x; }
double to_double(const Big& x) { return x.convert_to<double>(); }

// Restores the mpfr default precision on scope exit.
class PrecisionScope {
public:
    explicit PrecisionScope(unsigned digits) : saved_(Big::default_precision()) { Big::default_precision(digits); }
    ~PrecisionScope() { Big::default_precision(saved_); }
    PrecisionScope(const PrecisionScope&) = delete;
    PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
    unsigned saved_;
};

// Grid points are stored as integer indices j at resolution N (coordinates j / N), packed into one key.
using Key = std::uint64_t;

Key pack(const long* j, int d, long N) {
    Key k = 0;
    for (int i = 0; i < d; ++i) k = k * static_cast<Key>(N) + static_cast<Key>(j[i]);
    return k;
}

void unpack(Key k, int d, long N, long* j) {
    for (int i = d - 1; i >= 0; --i) {
        j[i] = static_cast<long>(k % static_cast<Key>(N));
        k /= static_cast<Key>(N);
    }
}

std::vector<double> cos_table(long N) {
    std::vector<double> t(N);
    for (long i = 0; i < N; ++i) t[i] = std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(N));
    return t;
}

long phase_index(const int* m, const long* j, int d, long N) {
    long long acc = 0;
    for (int i = 0; i < d; ++i) acc += static_cast<long long>(m[i]) * j[i];
    acc %= N;
    if (acc < 0) acc += N;
    return static_cast<long>(acc);
}

// Double-precision model of the shift profile used on grids.
// Poisson regime: sum over non-zero dual vectors of w cos(2 pi m.c), weights relative to the shortest shell.
// Direct regime: sum over lattice points of exp(-pi alpha |B(k + c)|^2).
struct GridModel {
    int d = 0;
    bool poisson = false;
    double alpha = 0.0;
    double r1 = 0.0;
    std::vector<int> m;
    std::vector<double> w;
    Matrix basis;
    Matrix points;  // columns B k
    double amplitude = 0.0;

    double eval(const long* j, long N, const std::vector<double>& table) const {
        if (poisson) {
            double s = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * table[phase_index(m.data() + i * d, j, d, N)];
            return s;
        }
        Vector c(d);
        for (int i = 0; i < d; ++i) c[i] = static_cast<double>(j[i]) / static_cast<double>(N);
        const Vector x = basis * c;
        double s = 0.0;
        for (Eigen::Index k = 0; k < points.cols(); ++k) s += std::exp(-kPi * alpha * (points.col(k) + x).squaredNorm());
        return s;
    }
};

double cell_half_diagonal(const BravaisLattice& lattice) {
    const int d = lattice.dim();
    double h = 0.0;
    for (int mask = 0; mask < (1 << d); ++mask) {
        Vector c(d);
        for (int i = 0; i < d; ++i) c[i] = (mask >> i) & 1 ? 0.5 : -0.5;
        h = std::max(h, lattice.to_cartesian(c).norm());
    }
    return h;
}

// Squared norms of the first two non-zero dual shells.
std::pair<double, double> dual_shell_norms(const BravaisLattice& dl) {
    const auto shells = enumerate_shells(dl, Vector::Zero(dl.dim()), 3);
    return {shells[1].sq_norm, shells[2].sq_norm};
}

GridModel make_grid_model(const BravaisLattice& lattice, double alpha) {
    GridModel g;
    g.d = lattice.dim();
    g.alpha = alpha;
    g.poisson = poisson_regime(lattice, alpha);
    g.basis = lattice.basis();
    if (g.poisson) {
        const BravaisLattice dl = dual(lattice);
        g.r1 = dual_shell_norms(dl).first;
        const double r2max = g.r1 + 17.0 * kLn10 * alpha / kPi;
        const PointList pl = enumerate_ball(dl, Vector::Zero(g.d), r2max);
        for (std::size_t i = 0; i < pl.size(); ++i) {
            if (pl.sq_norms[i] < 0.5 * g.r1) continue;
            g.m.insert(g.m.end(), pl.coeff(i), pl.coeff(i) + g.d);
            g.w.push_back(std::exp(-kPi * (pl.sq_norms[i] - g.r1) / alpha));
            g.amplitude += g.w.back();
        }
    } else {
        const double h = cell_half_diagonal(lattice);
        const double reach = std::sqrt(h * h + 17.0 * kLn10 / (kPi * alpha)) + h;
        const Vector centre = Vector::Constant(g.d, 0.5);
        const PointList pl = enumerate_ball(lattice, centre, reach * reach);
        g.points.resize(g.d, static_cast<Eigen::Index>(pl.size()));
        for (std::size_t i = 0; i < pl.size(); ++i) {
            Vector k(g.d);
            for (int a = 0; a < g.d; ++a) k[a] = pl.coeff(i)[a];
            g.points.col(static_cast<Eigen::Index>(i)) = lattice.to_cartesian(k);
        }
    }
    return g;
}

double band_tolerance(const GridModel& g, double vmin) {
    if (g.poisson) return std::max(1e-12, 64.0 * std::numeric_limits<double>::epsilon()) * g.amplitude;
    return 1e-12 * std::abs(vmin);
}

struct Scored {
    Key key;
    double value;
};

std::vector<Scored> select_band(std::vector<Scored> pts, const GridModel& g, std::size_t cap) {
    double vmin = pts.front().value;
    for (const auto& p : pts) vmin = std::min(vmin, p.value);
    const double tol = band_tolerance(g, vmin);
    std::vector<Scored> band;
    for (const auto& p : pts)
        if (p.value <= vmin + tol) band.push_back(p);
    if (band.size() > cap) {
        std::stable_sort(band.begin(), band.end(), [](const Scored& a, const Scored& b) { return a.value < b.value; });
        band.resize(cap);
    }
    std::sort(band.begin(), band.end(), [](const Scored& a, const Scored& b) { return a.key < b.key; });
    return band;
}

// ---- polish -------------------------------------------------------------------------------------------------

template <class T>
void jacobi_eigen(std::vector<T> a, int d, std::vector<T>& evals, std::vector<T>& vecs, const T& tiny) {
    using std::abs;
    using std::sqrt;
    vecs.assign(static_cast<std::size_t>(d * d), T(0));
    for (int i = 0; i < d; ++i) vecs[i * d + i] = T(1);
    for (int sweep = 0; sweep < 100; ++sweep) {
        T off(0), diag(0);
        for (int p = 0; p < d; ++p) {
            diag += a[p * d + p] * a[p * d + p];
            for (int q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
        }
        if (off <= tiny * diag || off == T(0)) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                if (a[p * d + q] == T(0)) continue;
                const T theta = (a[q * d + q] - a[p * d + p]) / (2 * a[p * d + q]);
                T t = 1 / (abs(theta) + sqrt(theta * theta + 1));
                if (theta < 0) t = -t;
                const T c = 1 / sqrt(t * t + 1);
                const T s = t * c;
                for (int k = 0; k < d; ++k) {
                    const T akp = a[k * d + p], akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const T apk = a[p * d + k], aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const T vkp = vecs[k * d + p], vkq = vecs[k * d + q];
                    vecs[k * d + p] = c * vkp - s * vkq;
                    vecs[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    evals.resize(d);
    for (int i = 0; i < d; ++i) evals[i] = a[i * d + i];
}

template <class T>
struct PoissonProfile {
    int d = 0;
    int mmax = 0;
    std::vector<int> m;
    std::vector<T> w;
    T two_pi;
    T amplitude;

    void eval(const std::vector<T>& c, T& f, std::vector<T>* g, std::vector<T>* h) const {
        using std::cos;
        using std::sin;
        const int width = 2 * mmax + 1;
        std::vector<T> re(static_cast<std::size_t>(d * width)), im(static_cast<std::size_t>(d * width));
        for (int i = 0; i < d; ++i) {
            const T ang = two_pi * c[i];
            const T cr = cos(ang), ci = sin(ang);
            T* r = re.data() + i * width + mmax;
            T* q = im.data() + i * width + mmax;
            r[0] = 1;
            q[0] = 0;
            for (int e = 1; e <= mmax; ++e) {
                r[e] = r[e - 1] * cr - q[e - 1] * ci;
                q[e] = r[e - 1] * ci + q[e - 1] * cr;
                r[-e] = r[e];
                q[-e] = -q[e];
            }
        }
        f = 0;
        if (g) g->assign(d, T(0));
        if (h) h->assign(static_cast<std::size_t>(d * d), T(0));
        for (std::size_t t = 0; t < w.size(); ++t) {
            const int* mt = m.data() + t * d;
            T cr = 1, ci = 0;
            for (int i = 0; i < d; ++i) {
                const T& r = re[i * width + mmax + mt[i]];
                const T& q = im[i * width + mmax + mt[i]];
                const T nr = cr * r - ci * q;
                ci = cr * q + ci * r;
                cr = nr;
            }
            f += w[t] * cr;
            if (g) {
                const T gs = -two_pi * w[t] * ci;
                for (int i = 0; i < d; ++i) (*g)[i] += gs * mt[i];
            }
            if (h) {
                const T hs = -two_pi * two_pi * w[t] * cr;
                for (int i = 0; i < d; ++i)
                    for (int k = 0; k < d; ++k) (*h)[i * d + k] += hs * (mt[i] * mt[k]);
            }
        }
    }
};

struct DirectProfile {
    int d = 0;
    double alpha = 0.0;
    Matrix basis;
    Matrix gram;
    Matrix points;
    double amplitude = 0.0;

    void eval(const std::vector<double>& c, double& f, std::vector<double>* g, std::vector<double>* h) const {
        Vector cv(d);
        for (int i = 0; i < d; ++i) cv[i] = c[i];
        const Vector x = basis * cv;
        Vector grad = Vector::Zero(d);
        Matrix hess = Matrix::Zero(d, d);
        f = 0.0;
        for (Eigen::Index k = 0; k < points.cols(); ++k) {
            const Vector y = points.col(k) + x;
            const double e = std::exp(-kPi * alpha * y.squaredNorm());
            f += e;
            const Vector v = basis.transpose() * y;
            grad += e * (-2.0 * kPi * alpha) * v;
            hess += e * (4.0 * kPi * kPi * alpha * alpha * (v * v.transpose()) - 2.0 * kPi * alpha * gram);
        }
        if (g) {
            g->resize(d);
            for (int i = 0; i < d; ++i) (*g)[i] = grad[i];
        }
        if (h) {
            h->resize(static_cast<std::size_t>(d * d));
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) (*h)[i * d + k] = hess(i, k);
        }
    }
};

// Newton iteration on |H| with step cap and backtracking; stops when no decrease is found.
template <class T, class Profile>
std::vector<T> newton_polish(const Profile& prof, std::vector<T> c, const T& floor_rel, const T& step_tol, const T& tiny) {
    using std::abs;
    using std::max;
    const int d = prof.d;
    T f;
    std::vector<T> g, h, evals, vecs;
    for (int it = 0; it < 200; ++it) {
        prof.eval(c, f, &g, &h);
        jacobi_eigen<T>(h, d, evals, vecs, tiny);
        T lmax(0);
        for (const T& l : evals) lmax = max(lmax, T(abs(l)));
        const T floor = lmax * floor_rel;
        std::vector<T> step(d, T(0));
        for (int e = 0; e < d; ++e) {
            T proj(0);
            for (int i = 0; i < d; ++i) proj += vecs[i * d + e] * g[i];
            const T denom = max(T(abs(evals[e])), floor);
            if (denom == T(0)) continue;
            for (int i = 0; i < d; ++i) step[i] -= vecs[i * d + e] * proj / denom;
        }
        T norm(0);
        for (const T& s : step) norm = max(norm, T(abs(s)));
        if (norm == T(0)) break;
        if (norm > T(0.25)) {
            for (T& s : step) s *= T(0.25) / norm;
            norm = T(0.25);
        }
        bool moved = false;
        T scale(1);
        for (int bt = 0; bt < 80; ++bt, scale /= 2) {
            std::vector<T> trial(c);
            for (int i = 0; i < d; ++i) trial[i] += scale * step[i];
            T ft;
            prof.eval(trial, ft, nullptr, nullptr);
            if (ft < f) {
                c = std::move(trial);
                moved = true;
                break;
            }
        }
        if (!moved || norm * scale < step_tol) break;
    }
    return c;
}

std::vector<double> reduce_coords(const std::vector<double>& c) {
    std::vector<double> r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        r[i] = c[i] - std::floor(c[i]);
        if (r[i] >= 1.0 - 1e-12) r[i] = 0.0;
    }
    return r;
}

bool same_mod_lattice(const Vector& a, const Vector& b, double tol) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double delta = a[i] - b[i];
        delta -= std::round(delta);
        if (std::abs(delta) > tol) return false;
    }
    return true;
}

bool lex_less(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - 1e-15) return true;
        if (a[i] > b[i] + 1e-15) return false;
    }
    return false;
}

template <class T, class Profile>
std::vector<Vector> rank_polished(const Profile& prof, const std::vector<std::vector<T>>& ends, const T& tie_tol) {
    std::vector<T> values(ends.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < ends.size(); ++i) {
        prof.eval(ends[i], values[i], nullptr, nullptr);
        if (values[i] < values[best]) best = i;
    }
    std::vector<Vector> out;
    for (std::size_t i = 0; i < ends.size(); ++i) {
        if (values[i] > values[best] + tie_tol) continue;
        std::vector<double> cd(ends[i].size());
        for (std::size_t k = 0; k < cd.size(); ++k) cd[k] = to_double(ends[i][k]);
        cd = reduce_coords(cd);
        const Vector v = Eigen::Map<const Vector>(cd.data(), static_cast<Eigen::Index>(cd.size()));
        bool dup = false;
        for (const Vector& o : out) dup = dup || same_mod_lattice(o, v, 1e-6);
        if (!dup) out.push_back(v);
    }
    return out;
}

// Mpfr Gram matrix of the dual from the double basis; integer combinations of its entries carry exact ties.
std::vector<Big> dual_gram_big(const Matrix& basis) {
    const int d = static_cast<int>(basis.cols());
    std::vector<Big> g(static_cast<std::size_t>(d * d));
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            Big s(0);
            for (int r = 0; r < d; ++r) s += Big(basis(r, i)) * Big(basis(r, k));
            g[i * d + k] = s;
        }
    std::vector<Big> inv(static_cast<std::size_t>(d * d));
    if (d == 1) {
        inv[0] = 1 / g[0];
    } else if (d == 2) {
        const Big det = g[0] * g[3] - g[1] * g[2];
        inv = {g[3] / det, -g[1] / det, -g[2] / det, g[0] / det};
    } else {
        auto at = [&](int i, int k) -> const Big& { return g[i * 3 + k]; };
        std::vector<Big> adj(9);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                const int r0 = (k + 1) % 3, r1 = (k + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
                adj[i * 3 + k] = at(r0, c0) * at(r1, c1) - at(r0, c1) * at(r1, c0);
            }
        const Big det = at(0, 0) * adj[0] + at(0, 1) * adj[3] + at(0, 2) * adj[6];
        for (int i = 0; i < 9; ++i) inv[i] = adj[i] / det;
    }
    return inv;
}

std::vector<std::vector<double>> polish_starts(const std::vector<Scored>& band, int d, long N, int max_starts) {
    std::vector<std::size_t> chosen;
    if (band.size() <= static_cast<std::size_t>(max_starts)) {
        for (std::size_t i = 0; i < band.size(); ++i) chosen.push_back(i);
    } else {
        std::vector<std::size_t> order(band.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return band[a].value < band[b].value; });
        const std::size_t lowest = static_cast<std::size_t>(max_starts / 4);
        chosen.assign(order.begin(), order.begin() + static_cast<long>(lowest));
        const std::size_t spread = static_cast<std::size_t>(max_starts) - lowest;
        for (std::size_t i = 0; i < spread; ++i) chosen.push_back(i * band.size() / spread);
        std::sort(chosen.begin(), chosen.end());
        chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    }
    std::vector<std::vector<double>> starts;
    std::vector<long> j(d);
    for (std::size_t idx : chosen) {
        unpack(band[idx].key, d, N, j.data());
        std::vector<double> c(d);
        for (int i = 0; i < d; ++i) c[i] = static_cast<double>(j[i]) / static_cast<double>(N);
        starts.push_back(std::move(c));
    }
    return starts;
}

}  // namespace

// ---- grid argmin --------------------------------------------------------------------------------------------

std::vector<double> shift_profile_grid(const BravaisLattice& lattice, double alpha, int grid_n) {
    if (!(alpha > 0.0)) throw std::domain_error("shift_profile_grid: alpha must be positive");
    if (grid_n < 2) throw std::invalid_argument("shift_profile_grid: grid_n must be >= 2");
    const int d = lattice.dim();
    const double total = std::pow(static_cast<double>(grid_n), d);
    if (total > 2e7) throw std::invalid_argument("shift_profile_grid: grid exceeds 2e7 points");
    const GridModel g = make_grid_model(lattice, alpha);
    const std::vector<double> table = cos_table(grid_n);
    std::vector<double> out(static_cast<std::size_t>(total));
    std::vector<long> j(d);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        unpack(idx, d, grid_n, j.data());
        out[idx] = g.eval(j.data(), grid_n, table);
    }
    return out;
}

MinimizerReport argmin_shift_grid(const BravaisLattice& lattice, double alpha, int grid_n, int refine_rounds,
                                  const ArgminOptions& opts) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::domain_error("argmin_shift_grid: alpha must be positive");
    if (grid_n < 8) throw std::invalid_argument("argmin_shift_grid: grid_n must be >= 8");
    if (refine_rounds < 0 || refine_rounds > 8) throw std::invalid_argument("argmin_shift_grid: refine_rounds must be in [0,8]");
    const int d = lattice.dim();
    if (std::pow(static_cast<double>(grid_n), d) > 2e7) throw std::invalid_argument("argmin_shift_grid: grid exceeds 2e7 points");
    const long n_final = static_cast<long>(grid_n) << (2 * refine_rounds);
    if (d * std::log2(static_cast<double>(n_final)) > 62.0) throw std::invalid_argument("argmin_shift_grid: refined grid too fine");

    const GridModel model = make_grid_model(lattice, alpha);
    long N = grid_n;
    std::vector<Scored> pts;
    {
        const std::vector<double> table = cos_table(N);
        const Key total = static_cast<Key>(std::llround(std::pow(static_cast<double>(N), d)));
        std::vector<long> j(d);
        pts.reserve(total);
        for (Key k = 0; k < total; ++k) {
            unpack(k, d, N, j.data());
            pts.push_back({k, model.eval(j.data(), N, table)});
        }
    }
    std::vector<Scored> band = select_band(std::move(pts), model, opts.max_band);

    for (int round = 0; round < refine_rounds; ++round) {
        const long M = 4 * N;
        const std::vector<double> table = cos_table(M);
        std::vector<Key> keys;
        std::vector<long> j(d), q(d);
        const int width = 7;
        long combos = 1;
        for (int i = 0; i < d; ++i) combos *= width;
        for (const Scored& s : band) {
            unpack(s.key, d, N, j.data());
            for (long c = 0; c < combos; ++c) {
                long rest = c;
                for (int i = 0; i < d; ++i) {
                    const long delta = rest % width - 3;
                    rest /= width;
                    q[i] = ((4 * j[i] + delta) % M + M) % M;
                }
                keys.push_back(pack(q.data(), d, M));
            }
        }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        std::vector<Scored> next;
        next.reserve(keys.size());
        for (Key k : keys) {
            unpack(k, d, M, j.data());
            next.push_back({k, model.eval(j.data(), M, table)});
        }
        N = M;
        band = select_band(std::move(next), model, opts.max_band);
    }

    MinimizerReport rep;
    rep.alpha = alpha;
    rep.resolution = 1.0 / static_cast<double>(N);
    rep.precision_digits = 16;

    if (opts.polish && d <= 3) {
        const auto starts = polish_starts(band, d, N, opts.max_polish_starts);
        if (model.poisson) {
            const BravaisLattice dl = dual(lattice);
            const auto [r1d, r2d] = dual_shell_norms(dl);
            const double gap_digits = 3.0 * kPi * (r2d - r1d) / (alpha * kLn10);
            const int digits_needed = std::min(1500, 25 + static_cast<int>(std::ceil(gap_digits)));
            const int digits = std::max(digits_needed, 70);
            PrecisionScope scope(static_cast<unsigned>(digits));
            const std::vector<Big> gstar = dual_gram_big(lattice.basis());
            const double r2max = (r1d + digits * kLn10 * alpha / kPi) * (1.0 + 1e-9);
            const PointList pl = enumerate_ball(dl, Vector::Zero(d), r2max);
            PoissonProfile<Big> prof;
            prof.d = d;
            prof.two_pi = 2 * mp::acos(Big(-1));
            std::vector<Big> sq;
            Big r1;
            bool have = false;
            for (std::size_t i = 0; i < pl.size(); ++i) {
                if (pl.sq_norms[i] < 0.5 * r1d) continue;
                const int* mi = pl.coeff(i);
                Big s(0);
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) s += gstar[a * d + b] * (mi[a] * mi[b]);
                if (!have || s < r1) r1 = s;
                have = true;
                sq.push_back(s);
                prof.m.insert(prof.m.end(), mi, mi + d);
                for (int a = 0; a < d; ++a) prof.mmax = std::max(prof.mmax, std::abs(mi[a]));
            }
            const Big pi = prof.two_pi / 2;
            const Big a_big(alpha);
            prof.amplitude = 0;
            for (const Big& s : sq) {
                prof.w.push_back(mp::exp(-pi * (s - r1) / a_big));
                prof.amplitude += prof.w.back();
            }
            const Big floor_rel = mp::pow(Big(10), -(digits - 10));
            const Big step_tol = mp::pow(Big(10), -(digits / 2));
            const Big tiny = mp::pow(Big(10), -2 * digits);
            std::vector<std::vector<Big>> ends;
            for (const auto& s : starts) {
                std::vector<Big> c(s.begin(), s.end());
                ends.push_back(newton_polish<Big>(prof, c, floor_rel, step_tol, tiny));
            }
            const Big tie = mp::pow(Big(10), -(digits - 8)) * prof.amplitude;
            rep.minimizers = rank_polished<Big>(prof, ends, tie);
            rep.precision_digits = digits;
        } else {
            DirectProfile prof;
            prof.d = d;
            prof.alpha = alpha;
            prof.basis = lattice.basis();
            prof.gram = lattice.gram();
            prof.points = model.points;
            std::vector<std::vector<double>> ends;
            for (const auto& s : starts) ends.push_back(newton_polish<double>(prof, s, 1e-12, 1e-14, 1e-32));
            double fmin = 0.0;
            prof.eval(ends.front(), fmin, nullptr, nullptr);
            for (const auto& e : ends) {
                double f = 0.0;
                prof.eval(e, f, nullptr, nullptr);
                fmin = std::min(fmin, f);
            }
            rep.minimizers = rank_polished<double>(prof, ends, 1e-12 * std::abs(fmin));
        }
    } else {
        std::vector<long> j(d);
        for (const Scored& s : band) {
            unpack(s.key, d, N, j.data());
            Vector c(d);
            for (int i = 0; i < d; ++i) c[i] = static_cast<double>(j[i]) / static_cast<double>(N);
            rep.minimizers.push_back(c);
        }
    }
    std::sort(rep.minimizers.begin(), rep.minimizers.end(), lex_less);
    rep.value = theta(lattice, lattice.to_cartesian(rep.minimizers.front()), alpha).value;
    return rep;
}

double theta_shift_difference(const BravaisLattice& lattice, const Vector& x, const Vector& y, double alpha) {
    if (!(alpha > 0.0)) throw std::domain_error("theta_shift_difference: alpha must be positive");
    if (!poisson_regime(lattice, alpha))
        return theta(lattice, x, alpha).value - theta(lattice, y, alpha).value;
    const int d = lattice.dim();
    const BravaisLattice dl = dual(lattice);
    const double r1 = dual_shell_norms(dl).first;
    const PointList pl = enumerate_ball(dl, Vector::Zero(d), r1 + 17.0 * kLn10 * alpha / kPi);
    const Vector cx = lattice.to_coords(x), cy = lattice.to_coords(y);
    double s = 0.0;
    for (std::size_t i = 0; i < pl.size(); ++i) {
        if (pl.sq_norms[i] < 0.5 * r1) continue;
        double px = 0.0, py = 0.0;
        for (int a = 0; a < d; ++a) {
            px += pl.coeff(i)[a] * (cx[a] - std::floor(cx[a]));
            py += pl.coeff(i)[a] * (cy[a] - std::floor(cy[a]));
        }
        s += std::exp(-kPi * pl.sq_norms[i] / alpha) * (std::cos(2.0 * kPi * px) - std::cos(2.0 * kPi * py));
    }
    return std::pow(alpha, -0.5 * d) / lattice.covolume() * s;
}

std::optional<double> deep_hole_crossing(const BravaisLattice& lattice, const Vector& x, double alpha_hi, double alpha_lo) {
    if (lattice.dim() != 2) throw std::invalid_argument("deep_hole_crossing: dimension must be 2");
    if (!(alpha_hi > 0.0)) throw std::domain_error("deep_hole_crossing: alpha_hi must be positive");
    if (alpha_lo <= 0.0) alpha_lo = alpha_hi / 1000.0;
    if (!(alpha_lo < alpha_hi)) throw std::invalid_argument("deep_hole_crossing: alpha_lo must be below alpha_hi");
    const DeepHoles holes = deep_holes_2d(lattice);
    for (const Vector& c : holes.points) {
        if (same_mod_lattice(lattice.to_coords(c), lattice.to_coords(x), 1e-9))
            throw std::invalid_argument("deep_hole_crossing: x is a deep hole");
    }
    constexpr int kPoints = 50;
    std::vector<bool> holds(kPoints);
    std::vector<double> grid(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        grid[i] = alpha_lo * std::pow(alpha_hi / alpha_lo, static_cast<double>(i) / (kPoints - 1));
        double worst = -INFINITY;
        for (const Vector& c : holes.points) worst = std::max(worst, theta_shift_difference(lattice, c, x, grid[i]));
        holds[i] = worst <= 0.0;
    }
    std::optional<double> out;
    for (int i = kPoints - 1; i >= 0 && holds[i]; --i) out = grid[i];
    return out;
}

// ---- small-alpha classification ----------------------------------------------------------------------------

std::string to_string(AsymptoticCase c) {
    switch (c) {
        case AsymptoticCase::Triangular: return "triangular";
        case AsymptoticCase::RhombicC1Four: return "rhombic_C1_4";
        case AsymptoticCase::GenericC2Small: return "generic_C2_small";
        default: return "generic_quarter";
    }
}

namespace {

// c with m1.c = t1 and m2.c = t2, reduced to [0,1).
Vector solve_coords(const Eigen::Vector2i& m1, const Eigen::Vector2i& m2, double t1, double t2) {
    Eigen::Matrix2d a;
    a << m1[0], m1[1], m2[0], m2[1];
    const Eigen::Vector2d c = a.inverse() * Eigen::Vector2d(t1, t2);
    std::vector<double> r = reduce_coords({c[0], c[1]});
    Vector out(2);
    out << r[0], r[1];
    return out;
}

double cross2(const Vector& a, const Vector& b) { return a[0] * b[1] - a[1] * b[0]; }

std::string quarter_subcase(double x) {
    struct Mark {
        double v;
        const char* name;
    };
    const Mark marks[] = {{std::sqrt(3.0) / 2.0, "sqrt(3)/2"}, {1.0, "1"},
                          {std::sqrt(7.0) / 2.0, "sqrt(7)/2"}, {5.0 / (2.0 * std::sqrt(3.0)), "5/(2 sqrt(3))"},
                          {1.5, "3/2"}, {std::sqrt(11.0) / 2.0, "sqrt(11)/2"}, {std::sqrt(15.0) / 2.0, "sqrt(15)/2"}};
    std::ostringstream os;
    os << "x=" << x;
    for (const Mark& m : marks)
        if (std::abs(x - m.v) <= 1e-9) return os.str() + " (x = " + m.name + ")";
    const char* lo = nullptr;
    const char* hi = nullptr;
    for (const Mark& m : marks) {
        if (m.v < x) lo = m.name;
        if (m.v > x && !hi) hi = m.name;
    }
    os << " in (" << (lo ? lo : "0") << ", " << (hi ? hi : "inf") << ")";
    return os.str();
}

}  // namespace

ClassificationResult classify_asymptotic_2d(const BravaisLattice& lattice) {
    if (lattice.dim() != 2) throw std::invalid_argument("classify_asymptotic_2d: dimension must be 2");
    const BravaisLattice dl = dual(lattice);
    Eigen::Matrix2i u;
    const BravaisLattice red = reduce_2d(dl, u);
    const Vector d1 = red.basis().col(0), d2 = red.basis().col(1);
    const Eigen::Vector2i m1 = u.col(0), m2 = u.col(1);
    const auto shells = enumerate_shells(dl, Vector::Zero(2), 12);

    ClassificationResult res;
    res.c1_size = static_cast<int>(shells[1].points.size());
    const double n1 = d1.squaredNorm();
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); };

    if (res.c1_size == 6) {
        res.case_label = AsymptoticCase::Triangular;
        const Eigen::Vector2i e2 = close((d1 + d2).squaredNorm(), n1) ? m2 : Eigen::Vector2i(-m2);
        res.C = {solve_coords(m1, e2, 1.0 / 3.0, 1.0 / 3.0)};
        res.deciding_shell = 1;
        return res;
    }
    if (res.c1_size == 4) {
        res.case_label = AsymptoticCase::RhombicC1Four;
        res.C = {solve_coords(m1, m2, 0.5, 0.5)};
        res.deciding_shell = 1;
        return res;
    }
    if (res.c1_size != 2) throw std::logic_error("classify_asymptotic_2d: first dual shell has an impossible size");

    for (std::size_t k = 2; k < shells.size(); ++k) {
        int off_line = 0;
        for (const Vector& v : shells[k].points)
            if (std::abs(cross2(v, d1)) > 1e-9 * v.norm() * d1.norm()) ++off_line;
        if (off_line == 0) continue;
        res.deciding_shell = static_cast<int>(k);
        res.c2_size = off_line;
        break;
    }
    if (res.c2_size == 2) {
        res.case_label = AsymptoticCase::GenericC2Small;
        res.C = {solve_coords(m1, m2, 0.5, 0.5)};
        res.canonical_x = std::abs(cross2(d1, d2)) / n1;
        std::ostringstream os;
        os << "x=" << res.canonical_x;
        res.subcase = os.str();
        return res;
    }
    if (res.c2_size != 4) throw std::logic_error("classify_asymptotic_2d: second layer has an impossible size");
    res.case_label = AsymptoticCase::GenericQuarter;
    const bool plus = close((d1 + d2).squaredNorm(), d2.squaredNorm());
    const Eigen::Vector2i b2 = plus ? m2 : Eigen::Vector2i(-m2);
    res.C = {solve_coords(m1, b2, 0.5, 0.25), solve_coords(m1, b2, 0.5, 0.75)};
    std::sort(res.C.begin(), res.C.end(), lex_less);
    res.canonical_x = std::abs(cross2(d1, d2)) / n1;
    res.subcase = quarter_subcase(res.canonical_x);
    return res;
}

DecidingLayerResult deciding_layer_2d(const BravaisLattice& lattice, int max_layers, int grid_n) {
    if (lattice.dim() != 2) throw std::invalid_argument("deciding_layer_2d: dimension must be 2");
    if (max_layers < 1) throw std::invalid_argument("deciding_layer_2d: max_layers must be >= 1");
    if (grid_n < 4) throw std::invalid_argument("deciding_layer_2d: grid_n must be >= 4");
    const BravaisLattice dl = dual(lattice);
    const auto shells = enumerate_shells(dl, Vector::Zero(2), max_layers + 1);

    auto restrict_layer = [&](const std::vector<Key>& in, long N, const std::vector<double>& table, int layer) {
        const Shell& sh = shells[layer];
        std::vector<double> vals(in.size());
        long j[2];
        for (std::size_t i = 0; i < in.size(); ++i) {
            unpack(in[i], 2, N, j);
            double s = 0.0;
            for (const IntVector& m : sh.coeffs) s += table[phase_index(m.data(), j, 2, N)];
            vals[i] = s;
        }
        const double vmin = *std::min_element(vals.begin(), vals.end());
        const double tol = 1e-10 * static_cast<double>(sh.coeffs.size());
        std::vector<Key> out;
        for (std::size_t i = 0; i < in.size(); ++i)
            if (vals[i] <= vmin + tol) out.push_back(in[i]);
        return out;
    };
    auto isolated = [](const std::vector<Key>& keys, long N) {
        long a[2], b[2];
        for (std::size_t i = 0; i < keys.size(); ++i) {
            unpack(keys[i], 2, N, a);
            for (std::size_t k = i + 1; k < keys.size(); ++k) {
                unpack(keys[k], 2, N, b);
                bool adjacent = true;
                for (int q = 0; q < 2; ++q) {
                    const long diff = ((a[q] - b[q]) % N + N) % N;
                    adjacent = adjacent && (diff <= 1 || diff == N - 1);
                }
                if (adjacent) return false;
            }
        }
        return true;
    };
    auto to_coords = [](const std::vector<Key>& keys, long N) {
        std::vector<Vector> out;
        long j[2];
        for (Key k : keys) {
            unpack(k, 2, N, j);
            Vector c(2);
            c << static_cast<double>(j[0]) / N, static_cast<double>(j[1]) / N;
            out.push_back(c);
        }
        return out;
    };

    DecidingLayerResult res;
    long N = grid_n;
    std::vector<double> table = cos_table(N);
    std::vector<Key> surv(static_cast<std::size_t>(N * N));
    for (std::size_t i = 0; i < surv.size(); ++i) surv[i] = i;
    int unchanged = 0;
    int last_change = 1;
    for (int layer = 1; layer <= max_layers && layer < static_cast<int>(shells.size()); ++layer) {
        std::vector<Key> next = restrict_layer(surv, N, table, layer);
        const bool changed = next != surv;
        surv = std::move(next);
        res.survivor_sets.push_back(to_coords(surv, N));
        if (changed) {
            last_change = layer;
            unchanged = 0;
        } else {
            ++unchanged;
        }
        if (unchanged >= 2 && isolated(surv, N)) break;
    }
    res.layer_index = last_change;

    if (surv.size() <= 4096) {
        for (int round = 0; round < 2; ++round) {
            const long M = 4 * N;
            std::vector<Key> cand;
            long j[2], q[2];
            for (Key k : surv) {
                unpack(k, 2, N, j);
                for (long dx = -3; dx <= 3; ++dx)
                    for (long dy = -3; dy <= 3; ++dy) {
                        q[0] = ((4 * j[0] + dx) % M + M) % M;
                        q[1] = ((4 * j[1] + dy) % M + M) % M;
                        cand.push_back(pack(q, 2, M));
                    }
            }
            std::sort(cand.begin(), cand.end());
            cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
            N = M;
            table = cos_table(N);
            for (int layer = 1; layer <= last_change; ++layer) cand = restrict_layer(cand, N, table, layer);
            surv = std::move(cand);
        }
    }
    res.refined = to_coords(surv, N);
    return res;
}

}  // namespace thetalat
