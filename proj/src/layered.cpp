#include "thetalat/layered.hpp"

#include "thetalat/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace thetalat {

namespace {

constexpr double kPi = std::numbers::pi;

int seq_at(const ShiftSequence& s, long k) {
    const long p = s.period;
    return s.indices[static_cast<std::size_t>(((k % p) + p) % p)];
}

void validate(const ShiftSequence& s, std::size_t alphabet_size) {
    if (s.period < 1 || static_cast<int>(s.indices.size()) != s.period)
        throw std::invalid_argument("shift sequence: period must be >= 1 and match the index list");
    for (int i : s.indices)
        if (i < 0 || static_cast<std::size_t>(i) >= alphabet_size)
            throw std::invalid_argument("shift sequence: index outside the alphabet");
}

}  // namespace

void validate(const ShiftAlphabet& h) {
    if (h.vectors.empty()) throw std::invalid_argument("shift alphabet must be non-empty");
    for (const Vector& v : h.vectors)
        if (v.size() != h.dim_base) throw std::invalid_argument("shift alphabet: vector of wrong dimension");
    for (std::size_t i = 0; i < h.vectors.size(); ++i)
        for (std::size_t j = i + 1; j < h.vectors.size(); ++j)
            if ((h.vectors[i] - h.vectors[j]).norm() <= 1e-12) throw std::invalid_argument("shift alphabet: repeated vector");
}

void validate(const LayeredConfig& cfg) {
    if (!(cfg.spacing_t > 0.0) || !(cfg.scale_l > 0.0)) throw std::invalid_argument("layered: t and l must be positive");
    if (cfg.alphabet.dim_base != cfg.base.dim()) throw std::invalid_argument("layered: alphabet and base dimensions differ");
    validate(cfg.alphabet);
    validate(cfg.sequence, cfg.alphabet.vectors.size());
}

ShiftAlphabet triangular_alphabet() {
    ShiftAlphabet h;
    h.dim_base = 2;
    Vector a = Vector::Zero(2), b(2), c(2);
    b << 0.5, 0.5 / std::sqrt(3.0);
    c << 0.0, 1.0 / std::sqrt(3.0);
    h.vectors = {a, b, c};
    return h;
}

LayeredConfig preset_layered(const std::string& name, bool unit_density) {
    ShiftSequence seq;
    double t = 0.0, l = 1.0;
    if (name == "fcc" || name == "hcp") {
        if (unit_density) {
            t = PilingConstants::t_fcc();
            l = PilingConstants::l_fcc();
        } else {
            t = l * std::sqrt(2.0) / std::sqrt(3.0);
        }
        seq = name == "fcc" ? ShiftSequence{3, {0, 1, 2}} : ShiftSequence{2, {0, 1}};
    } else if (name == "bcc") {
        if (unit_density) {
            t = PilingConstants::t_bcc();
            l = PilingConstants::l_bcc();
        } else {
            t = l / (2.0 * std::sqrt(6.0));
        }
        seq = ShiftSequence{3, {0, 1, 2}};
    } else {
        throw std::invalid_argument("unknown layered preset " + name + " (expected fcc, bcc, hcp)");
    }
    return LayeredConfig{make_preset("A2", {1.0}), triangular_alphabet(), seq, t, l};
}

ThetaResult layered_theta(const LayeredConfig& cfg, double alpha, double rtol) {
    validate(cfg);
    if (!(alpha > 0.0)) throw std::domain_error("layered_theta: alpha must be positive");
    if (!(rtol > 0.0)) throw std::invalid_argument("layered_theta: rtol must be positive");
    const ShiftSequence& s = cfg.sequence;
    const int P = s.period;
    const double t = cfg.spacing_t;
    const double a_in = alpha * cfg.scale_l * cfg.scale_l;
    const double eps = rtol / 10.0;
    const long K = static_cast<long>(std::ceil(std::sqrt(std::log(1.0 / eps) / (kPi * alpha * t * t)))) + P;

    std::map<std::pair<int, int>, ThetaResult> cache;
    auto layer_theta = [&](int i, int j) -> const ThetaResult& {
        auto it = cache.find({i, j});
        if (it == cache.end()) {
            const Vector delta = cfg.alphabet.vectors[i] - cfg.alphabet.vectors[j];
            it = cache.emplace(std::make_pair(i, j), theta(cfg.base, delta, a_in, rtol)).first;
        }
        return it->second;
    };

    double value = 0.0, err = 0.0;
    long points = 0;
    for (int h = 0; h < P; ++h) {
        for (long k = h - K; k <= h + K; ++k) {
            const double dz = static_cast<double>(h - k) * t;
            const double w = std::exp(-kPi * alpha * dz * dz);
            const ThetaResult& th = layer_theta(s.indices[h], seq_at(s, k));
            value += w * th.value;
            err += w * th.abs_error;
        }
    }
    for (const auto& kv : cache) points += kv.second.points_summed;
    const double top = theta(cfg.base, a_in, rtol).value;
    const double q = std::exp(-kPi * alpha * t * t);
    const double first = std::pow(q, static_cast<double>((K + 1) * (K + 1)));
    const double ratio = std::pow(q, static_cast<double>(2 * K + 3));
    const double tail = 2.0 * first / (1.0 - ratio) * top * P;

    ThetaResult out;
    out.value = value / P;
    out.abs_error = (err + tail) / P;
    out.method = ThetaMethod::Direct;
    out.points_summed = points;
    return out;
}

ThetaResult layered_theta_gap(const LayeredConfig& a, const LayeredConfig& b, double alpha, double rtol) {
    validate(a);
    validate(b);
    if (!(alpha > 0.0)) throw std::domain_error("layered_theta_gap: alpha must be positive");
    if (a.spacing_t != b.spacing_t || a.scale_l != b.scale_l || a.base.basis() != b.base.basis() ||
        a.alphabet.vectors.size() != b.alphabet.vectors.size())
        throw std::invalid_argument("layered_theta_gap: configurations differ beyond their sequences");
    for (std::size_t i = 0; i < a.alphabet.vectors.size(); ++i)
        if (a.alphabet.vectors[i] != b.alphabet.vectors[i])
            throw std::invalid_argument("layered_theta_gap: configurations use different alphabets");
    const double a_in = alpha * a.scale_l * a.scale_l;
    ThetaResult gap;
    bool have = false;
    const auto& h = a.alphabet.vectors;
    for (std::size_t i = 0; i < h.size(); ++i)
        for (std::size_t j = 0; j < h.size(); ++j) {
            if (i == j) continue;
            const ThetaResult r = theta_gap(a.base, h[i] - h[j], a_in, rtol);
            if (!have) {
                gap = r;
                have = true;
            } else if (std::abs(r.value - gap.value) > 10.0 * (r.abs_error + gap.abs_error) + 1e-12 * std::abs(gap.value)) {
                throw std::invalid_argument("layered_theta_gap: shift differences give different layer energies");
            }
        }
    ThetaResult out;
    out.method = gap.method;
    if (!have) return out;  // single-letter alphabet, both configurations coincide
    const double diff = gap.value;
    const double diff_err = gap.abs_error;
    const double t = a.spacing_t;
    const int P = std::max(a.sequence.period, b.sequence.period);
    const long K = static_cast<long>(std::ceil(std::sqrt(std::log(10.0 / rtol) / (kPi * alpha * t * t)))) + P;
    double s = 0.0, wsum = 0.0;
    for (long k = 1; k <= K; ++k) {
        const double w = std::exp(-kPi * alpha * static_cast<double>(k * k) * t * t);
        const double dm = mismatch_fraction(a.sequence, static_cast<int>(k)) - mismatch_fraction(b.sequence, static_cast<int>(k));
        s += 2.0 * w * dm;
        wsum += 2.0 * w * std::abs(dm);
    }
    const double q = std::exp(-kPi * alpha * t * t);
    const double tail = 2.0 * std::pow(q, static_cast<double>((K + 1) * (K + 1))) / (1.0 - std::pow(q, static_cast<double>(2 * K + 3)));
    out.value = s * diff;
    out.abs_error = wsum * diff_err + tail * std::abs(diff) + 4.0 * K * std::numeric_limits<double>::epsilon() * std::abs(out.value);
    out.points_summed = gap.points_summed;
    return out;
}

std::vector<double> layered_shell_norms(const LayeredConfig& cfg, int count, double rel_tol) {
    validate(cfg);
    if (count < 1) throw std::invalid_argument("layered_shell_norms: count must be >= 1");
    const int db = cfg.base.dim();
    const double l = cfg.scale_l, t = cfg.spacing_t;
    double r = 2.0 * std::max(l * std::sqrt(cfg.base.lambda_max()), t);
    for (int attempt = 0; attempt < 40; ++attempt, r *= 1.5) {
        std::vector<double> norms;
        const long kmax = static_cast<long>(std::floor(r / t));
        const Vector s0 = cfg.alphabet.vectors[seq_at(cfg.sequence, 0)];
        for (long k = -kmax; k <= kmax; ++k) {
            const double dz = k * t;
            const double rem = r * r - dz * dz;
            if (rem < 0.0) continue;
            const Vector shift = cfg.alphabet.vectors[seq_at(cfg.sequence, k)] - s0;
            const PointList pl = enumerate_ball(cfg.base, cfg.base.to_coords(shift), rem / (l * l));
            for (double q : pl.sq_norms) {
                const double d2 = l * l * q + dz * dz;
                if (d2 > 1e-18) norms.push_back(d2);
            }
        }
        std::sort(norms.begin(), norms.end());
        std::vector<double> shells;
        for (double q : norms) {
            if (shells.empty() || q - shells.back() > rel_tol * std::max(1.0, shells.back())) shells.push_back(q);
        }
        while (!shells.empty() && shells.back() > r * r * (1.0 - 1e-8)) shells.pop_back();
        if (static_cast<int>(shells.size()) > count) {
            shells.resize(count);
            return shells;
        }
        (void)db;
    }
    throw std::runtime_error("layered_shell_norms: radius search did not terminate");
}

bool same_symmetries_check(const BravaisLattice& base, const ShiftAlphabet& alphabet, double radius) {
    validate(alphabet);
    if (alphabet.dim_base != base.dim()) throw std::invalid_argument("same_symmetries_check: dimension mismatch");
    double max_h = 0.0, diam = 0.0;
    for (const Vector& x : alphabet.vectors) {
        max_h = std::max(max_h, x.norm());
        for (const Vector& y : alphabet.vectors) diam = std::max(diam, (x - y).norm());
    }
    if (!(radius > 2.0 * max_h) || !(radius > diam))
        throw std::invalid_argument("same_symmetries_check: radius must exceed twice the largest shift");
    const double keep = radius - diam;
    std::vector<double> reference;
    bool have_ref = false;
    for (std::size_t i = 0; i < alphabet.vectors.size(); ++i) {
        for (std::size_t j = 0; j < alphabet.vectors.size(); ++j) {
            if (i == j) continue;
            const Vector v = alphabet.vectors[i] - alphabet.vectors[j];
            const PointList pl = enumerate_ball(base, base.to_coords(v), keep * keep);
            std::vector<double> dists(pl.sq_norms.begin(), pl.sq_norms.end());
            std::sort(dists.begin(), dists.end());
            if (!have_ref) {
                reference = std::move(dists);
                have_ref = true;
                continue;
            }
            if (dists.size() != reference.size()) return false;
            for (std::size_t k = 0; k < dists.size(); ++k)
                if (std::abs(std::sqrt(dists[k]) - std::sqrt(reference[k])) > 1e-9) return false;
        }
    }
    return true;
}

double mismatch_fraction(const ShiftSequence& seq, int k) {
    if (seq.period < 1 || static_cast<int>(seq.indices.size()) != seq.period)
        throw std::invalid_argument("mismatch_fraction: malformed sequence");
    if (k < 1) throw std::invalid_argument("mismatch_fraction: k must be >= 1");
    int count = 0;
    for (int h = 0; h < seq.period; ++h) {
        if (seq_at(seq, h + k) != seq_at(seq, h)) ++count;
        if (seq_at(seq, h - k) != seq_at(seq, h)) ++count;
    }
    return static_cast<double>(count) / (2.0 * seq.period);
}

ShiftSequence canonical_form(const ShiftSequence& seq) {
    ShiftSequence best;
    bool have = false;
    for (int r = 0; r < seq.period; ++r) {
        std::map<int, int> relabel;
        ShiftSequence cand{seq.period, std::vector<int>(seq.period)};
        for (int i = 0; i < seq.period; ++i) {
            const int v = seq_at(seq, i + r);
            auto it = relabel.find(v);
            if (it == relabel.end()) it = relabel.emplace(v, static_cast<int>(relabel.size())).first;
            cand.indices[i] = it->second;
        }
        if (!have || cand.indices < best.indices) {
            best = cand;
            have = true;
        }
    }
    return best;
}

bool is_bijection_pattern(const ShiftSequence& seq, int alphabet_size) {
    if (seq.period % alphabet_size != 0) return false;
    std::vector<int> seen(alphabet_size, 0);
    for (int i = 0; i < alphabet_size; ++i) {
        if (seen[seq.indices[i]]++) return false;
    }
    for (int i = alphabet_size; i < seq.period; ++i)
        if (seq.indices[i] != seq.indices[i - alphabet_size]) return false;
    return true;
}

std::vector<ShiftSequence> greedy_A_conditions(int alphabet_size, int period, int depth) {
    if (alphabet_size < 1 || period < 1 || depth < 0) throw std::invalid_argument("greedy_A_conditions: bad arguments");
    const double space = std::pow(static_cast<double>(alphabet_size), period);
    if (space > 1e7) throw std::invalid_argument("greedy_A_conditions: search space exceeds 1e7 sequences");
    std::vector<ShiftSequence> pool;
    const long total = static_cast<long>(std::llround(space));
    for (long code = 0; code < total; ++code) {
        ShiftSequence s{period, std::vector<int>(period)};
        long c = code;
        for (int i = 0; i < period; ++i) {
            s.indices[i] = static_cast<int>(c % alphabet_size);
            c /= alphabet_size;
        }
        pool.push_back(std::move(s));
    }
    for (int k = 1; k <= depth; ++k) {
        double best = -1.0;
        for (const auto& s : pool) best = std::max(best, mismatch_fraction(s, k));
        std::vector<ShiftSequence> next;
        for (auto& s : pool)
            if (mismatch_fraction(s, k) >= best - 1e-12) next.push_back(std::move(s));
        pool = std::move(next);
    }
    std::vector<ShiftSequence> out;
    for (const auto& s : pool) {
        ShiftSequence c = canonical_form(s);
        bool dup = false;
        for (const auto& o : out) dup = dup || o.indices == c.indices;
        if (!dup) out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const ShiftSequence& a, const ShiftSequence& b) { return a.indices < b.indices; });
    return out;
}

}  // namespace thetalat
