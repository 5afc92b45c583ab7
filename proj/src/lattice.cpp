#include "thetalat/lattice.hpp"

#include "thetalat/enumerate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace thetalat {

namespace {

bool lex_less(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - 1e-12) return true;
        if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
}

void require_arity(const std::string& name, const std::vector<double>& p, std::size_t n) {
    if (p.size() != n)
        throw std::invalid_argument("preset " + name + " expects " + std::to_string(n) + " parameter(s), got " +
                                    std::to_string(p.size()));
}

void require_positive(const std::string& what, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(what + " must be positive");
}

Vector circumcenter(const Vector& a, const Vector& b, const Vector& c) {
    const double d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    const double aa = a.squaredNorm(), bb = b.squaredNorm(), cc = c.squaredNorm();
    Vector o(2);
    o[0] = (aa * (b[1] - c[1]) + bb * (c[1] - a[1]) + cc * (a[1] - b[1])) / d;
    o[1] = (aa * (c[0] - b[0]) + bb * (a[0] - c[0]) + cc * (b[0] - a[0])) / d;
    return o;
}

// Circumcentre when the triangle is not obtuse, else the midpoint of the longest edge.
Vector hole_of_triangle(const Vector& a, const Vector& b, const Vector& c) {
    const Vector pts[3] = {a, b, c};
    for (int i = 0; i < 3; ++i) {
        const Vector& p = pts[i];
        const Vector& q = pts[(i + 1) % 3];
        const Vector& r = pts[(i + 2) % 3];
        if ((q - p).dot(r - p) < 0.0) return 0.5 * (q + r);
    }
    return circumcenter(a, b, c);
}

}  // namespace

BravaisLattice::BravaisLattice(Matrix basis) : basis_(std::move(basis)) {
    if (basis_.rows() != basis_.cols() || basis_.rows() < 1)
        throw std::invalid_argument("lattice basis must be a non-empty square matrix");
    if (!basis_.allFinite()) throw std::invalid_argument("lattice basis has non-finite entries");
    const double det = basis_.determinant();
    const double scale = std::pow(basis_.cwiseAbs().maxCoeff(), static_cast<double>(basis_.cols()));
    if (!(std::abs(det) > 1e-14 * scale)) throw std::invalid_argument("lattice basis is singular");
    covolume_ = std::abs(det);
    gram_ = basis_.transpose() * basis_;
    inverse_ = basis_.inverse();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram_, Eigen::EigenvaluesOnly);
    lambda_min_ = es.eigenvalues().minCoeff();
    lambda_max_ = es.eigenvalues().maxCoeff();
}

Vector BravaisLattice::reduce_to_cell(const Vector& x) const {
    Vector c = to_coords(x);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        c[i] -= std::floor(c[i]);
        if (c[i] >= 1.0 - 1e-13) c[i] = 0.0;
    }
    return to_cartesian(c);
}

bool BravaisLattice::contains(const Vector& x, double tol) const {
    const Vector c = to_coords(x);
    return (c - c.array().round().matrix()).cwiseAbs().maxCoeff() <= tol;
}

double PilingConstants::t_bcc() { return std::pow(2.0, -2.0 / 3.0) / std::sqrt(3.0); }
double PilingConstants::l_bcc() { return std::pow(2.0, 5.0 / 6.0); }
double PilingConstants::t_fcc() { return std::pow(2.0, 2.0 / 3.0) / std::sqrt(3.0); }
double PilingConstants::l_fcc() { return std::pow(2.0, 1.0 / 6.0); }

BravaisLattice make_preset(const std::string& name, const std::vector<double>& p) {
    if (name == "Zd") {
        require_arity(name, p, 1);
        const double d = p[0];
        if (d < 1 || d != std::floor(d) || d > 16) throw std::invalid_argument("Zd dimension must be an integer in [1,16]");
        return BravaisLattice(Matrix::Identity(static_cast<int>(d), static_cast<int>(d)));
    }
    if (name == "A2") {
        require_arity(name, p, 1);
        require_positive("A2 side", p[0]);
        Matrix b(2, 2);
        b << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
        return BravaisLattice(b * p[0]);
    }
    if (name == "D3") {
        require_arity(name, p, 0);
        Matrix b(3, 3);
        b << 1, 1, 0, 1, 0, 1, 0, 1, 1;
        return BravaisLattice(b);
    }
    if (name == "FCC") {
        require_arity(name, p, 0);
        Matrix b(3, 3);
        b << 0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5;
        return BravaisLattice(b);
    }
    if (name == "BCC") {
        require_arity(name, p, 0);
        Matrix b(3, 3);
        b << 1.0, 0.0, 0.5, 0.0, 1.0, 0.5, 0.0, 0.0, 0.5;
        return BravaisLattice(b);
    }
    if (name == "Ly") {
        require_arity(name, p, 1);
        require_positive("y", p[0]);
        if (p[0] < 1.0) throw std::invalid_argument("Ly requires y >= 1");
        Matrix b = Matrix::Zero(2, 2);
        b(0, 0) = std::sqrt(p[0]);
        b(1, 1) = 1.0 / std::sqrt(p[0]);
        return BravaisLattice(b);
    }
    if (name == "Lyt") {
        require_arity(name, p, 2);
        require_positive("y", p[0]);
        require_positive("t", p[1]);
        if (p[0] < 1.0) throw std::invalid_argument("Lyt requires y >= 1");
        const double sy = std::sqrt(p[0]);
        Matrix b = Matrix::Zero(3, 3);
        b(0, 0) = sy;
        b(1, 1) = 1.0 / sy;
        b(0, 2) = sy / 2.0;
        b(1, 2) = 1.0 / (2.0 * sy);
        b(2, 2) = p[1] / 2.0;
        return BravaisLattice(b);
    }
    if (name == "rhombic") {
        require_arity(name, p, 2);
        require_positive("rhombic a", p[0]);
        require_positive("rhombic b", p[1]);
        Matrix b(2, 2);
        b << p[0], 0.0, p[1], 2.0 * p[0];
        return BravaisLattice(b);
    }
    throw std::invalid_argument("unknown preset: " + name);
}

BravaisLattice dual(const BravaisLattice& lattice) {
    return BravaisLattice(lattice.basis().inverse().transpose());
}

BravaisLattice normalize_density(const BravaisLattice& lattice) {
    return lattice.scaled(std::pow(lattice.covolume(), -1.0 / lattice.dim()));
}

IwasawaQDT iwasawa_qdt(const Matrix& m_in) {
    if (m_in.rows() != m_in.cols() || m_in.rows() < 1) throw std::invalid_argument("iwasawa_qdt: square matrix required");
    const int d = static_cast<int>(m_in.rows());
    const double det = m_in.determinant();
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw std::domain_error("iwasawa_qdt: singular matrix");
    IwasawaQDT out;
    Matrix m = m_in;
    if (det < 0.0) {
        m.col(d - 1) *= -1.0;
        out.last_column_negated = true;
    }
    // QL through QR of the column-reversed matrix
    Matrix rev = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) rev(i, d - 1 - i) = 1.0;
    Eigen::HouseholderQR<Matrix> qr(m * rev);
    Matrix qp = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    Matrix q = qp * rev;
    Matrix l = rev * r * rev;
    for (int i = 0; i < d; ++i) {
        if (l(i, i) < 0.0) {
            q.col(i) *= -1.0;
            l.row(i) *= -1.0;
        }
    }
    out.scale = std::pow(std::abs(det), 1.0 / d);
    out.d_diag = l.diagonal() / out.scale;
    out.t_lower = l.diagonal().asDiagonal().inverse() * l;
    for (int i = 0; i < d; ++i) {
        out.t_lower(i, i) = 1.0;
        for (int j = i + 1; j < d; ++j) out.t_lower(i, j) = 0.0;
    }
    out.q = q;
    return out;
}

PointList enumerate_ball(const BravaisLattice& lattice, const Vector& w, double r2) {
    const int d = lattice.dim();
    PointList out;
    out.dim = d;
    if (r2 < 0.0) return out;
    Eigen::LLT<Matrix> llt(lattice.gram());
    const Matrix R = llt.matrixU();
    std::vector<int> c(d, 0);
    std::vector<double> z(d, 0.0);
    const double r2_eff = r2 * (1.0 + 1e-12) + 1e-300;

    // level i: coordinates i+1..d-1 fixed, acc holds their contribution
    auto recurse = [&](auto&& self, int i, double acc) -> void {
        double s = 0.0;
        for (int j = i + 1; j < d; ++j) s += R(i, j) * z[j];
        const double center = -s / R(i, i) - w[i];
        const double rad = std::sqrt(std::max(0.0, r2_eff - acc)) / R(i, i);
        const long lo = static_cast<long>(std::ceil(center - rad));
        const long hi = static_cast<long>(std::floor(center + rad));
        for (long ci = lo; ci <= hi; ++ci) {
            c[i] = static_cast<int>(ci);
            z[i] = ci + w[i];
            const double part = R(i, i) * z[i] + s;
            const double nacc = acc + part * part;
            if (nacc > r2_eff) continue;
            if (i == 0) {
                out.coeffs.insert(out.coeffs.end(), c.begin(), c.end());
                out.sq_norms.push_back(nacc);
            } else {
                self(self, i - 1, nacc);
            }
        }
    };
    recurse(recurse, d - 1, 0.0);
    return out;
}

std::vector<Shell> enumerate_shells(const BravaisLattice& lattice, const Vector& center, int count, double rel_tol) {
    if (count < 1) throw std::invalid_argument("enumerate_shells: count must be >= 1");
    const int d = lattice.dim();
    const Vector w = -lattice.to_coords(center);
    double r2 = std::max(1.0, static_cast<double>(count)) * lattice.lambda_max();
    for (int attempt = 0; attempt < 60; ++attempt, r2 *= 2.0) {
        PointList pl = enumerate_ball(lattice, w, r2);
        std::vector<std::size_t> order(pl.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pl.sq_norms[a] < pl.sq_norms[b]; });
        std::vector<Shell> shells;
        for (std::size_t idx : order) {
            const double q = pl.sq_norms[idx];
            if (shells.empty() || std::abs(q - shells.back().sq_norm) > rel_tol * std::max(1.0, shells.back().sq_norm)) {
                if (q > r2 * (1.0 - 1e-8)) break;
                Shell s;
                s.sq_norm = q;
                shells.push_back(std::move(s));
            }
            IntVector ci(d);
            for (int k = 0; k < d; ++k) ci[k] = pl.coeff(idx)[k];
            shells.back().coeffs.push_back(ci);
            shells.back().points.push_back(lattice.to_cartesian(ci.cast<double>() + w));
        }
        if (static_cast<int>(shells.size()) > count ||
            (static_cast<int>(shells.size()) == count && shells.back().sq_norm < r2 * 0.5)) {
            shells.resize(count);
            for (auto& s : shells) {
                std::vector<std::size_t> idx(s.points.size());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lex_less(s.points[a], s.points[b]); });
                Shell sorted;
                double mean = 0.0;
                for (std::size_t i : idx) {
                    sorted.points.push_back(s.points[i]);
                    sorted.coeffs.push_back(s.coeffs[i]);
                    mean += s.points[i].squaredNorm();
                }
                sorted.sq_norm = mean / static_cast<double>(idx.size());
                s = std::move(sorted);
            }
            return shells;
        }
    }
    throw std::runtime_error("enumerate_shells: radius search did not terminate");
}

BravaisLattice reduce_2d(const BravaisLattice& lattice, Eigen::Matrix2i& u) {
    if (lattice.dim() != 2) throw std::invalid_argument("reduce_2d: dimension must be 2");
    Vector v1 = lattice.basis().col(0), v2 = lattice.basis().col(1);
    u = Eigen::Matrix2i::Identity();
    for (int iter = 0; iter < 10000; ++iter) {
        if (v1.squaredNorm() > v2.squaredNorm() * (1.0 + 1e-12)) {
            std::swap(v1, v2);
            u.col(0).swap(u.col(1));
        }
        const double ratio = v1.dot(v2) / v1.squaredNorm();
        if (std::abs(ratio) <= 0.5 + 1e-12) break;
        const double mu = std::round(ratio);
        v2 -= mu * v1;
        u.col(1) -= static_cast<int>(mu) * u.col(0);
    }
    Matrix b(2, 2);
    b.col(0) = v1;
    b.col(1) = v2;
    return BravaisLattice(b);
}

BravaisLattice reduce_2d(const BravaisLattice& lattice) {
    Eigen::Matrix2i u;
    return reduce_2d(lattice, u);
}

double nearest_sq_distance(const BravaisLattice& lattice, const Vector& x) {
    const Vector w = -lattice.reduce_to_cell(x);
    const Vector wc = lattice.to_coords(w);
    double half_diag = 0.0;
    for (int i = 0; i < lattice.dim(); ++i) half_diag += lattice.basis().col(i).norm();
    const PointList pl = enumerate_ball(lattice, wc, half_diag * half_diag);
    double best = std::numeric_limits<double>::infinity();
    for (double q : pl.sq_norms) best = std::min(best, q);
    return best;
}

DeepHoles deep_holes_2d(const BravaisLattice& lattice) {
    if (lattice.dim() != 2) throw std::invalid_argument("deep_holes_2d: dimension must be 2");
    const BravaisLattice red = reduce_2d(lattice);
    const Vector v1 = red.basis().col(0);
    Vector v2 = red.basis().col(1);
    if (v1.dot(v2) > 0.0) v2 = -v2;
    const Vector o = Vector::Zero(2);
    const Vector cands[2] = {hole_of_triangle(o, v1, v1 + v2), hole_of_triangle(o, v2, v1 + v2)};
    std::vector<std::pair<Vector, double>> scored;
    for (const Vector& c : cands) scored.emplace_back(c, nearest_sq_distance(lattice, c));
    double best = 0.0;
    for (const auto& s : scored) best = std::max(best, s.second);
    DeepHoles out;
    for (const auto& s : scored) {
        if (s.second < best * (1.0 - 1e-9)) continue;
        const Vector p = lattice.reduce_to_cell(s.first);
        bool dup = false;
        for (const Vector& q : out.points) dup = dup || lattice.contains(p - q, 1e-9);
        if (!dup) out.points.push_back(p);
    }
    std::sort(out.points.begin(), out.points.end(), lex_less);
    out.distance = std::sqrt(best);
    return out;
}

BravaisLattice parse_lattice_spec(const std::string& spec) {
    const auto first = spec.find_first_not_of(" \t\n");
    if (first != std::string::npos && spec[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(spec);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("lattice JSON: ") + e.what());
        }
        if (!j.contains("basis") || !j["basis"].is_array()) throw std::invalid_argument("lattice JSON needs a \"basis\" array");
        const auto& rows = j["basis"];
        const auto n = rows.size();
        Matrix b(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows[i].is_array() || rows[i].size() != n) throw std::invalid_argument("lattice JSON basis must be square");
            for (std::size_t k = 0; k < n; ++k) b(i, k) = rows[i][k].get<double>();
        }
        return BravaisLattice(b);
    }
    const std::string prefix = "preset:";
    if (spec.rfind(prefix, 0) != 0) throw std::invalid_argument("lattice spec must be preset:NAME[:p1,...] or JSON");
    std::string rest = spec.substr(prefix.size());
    std::string name = rest;
    std::vector<double> params;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
        name = rest.substr(0, colon);
        std::stringstream ss(rest.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                params.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad preset parameter: " + item);
            }
        }
    }
    return make_preset(name, params);
}

}  // namespace thetalat
