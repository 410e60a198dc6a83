#include "carnot/group.hpp"

#include "carnot/errors.hpp"
#include "group_impl.hpp"

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace carnot {

using detail::Entry;
using detail::GroupImpl;

namespace {

constexpr int kMaxStep = 4;
constexpr std::size_t kInlineDim = 16;

std::string basis_name(BasisRef b)
{
    std::ostringstream os;
    os << "X_{" << b.layer << "," << b.index << "}";
    return os.str();
}

int factorial(int n)
{
    int f = 1;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

// Rank of a list of rational vectors by fraction-exact elimination.
int rational_rank(std::vector<std::vector<Rational>> rows)
{
    if (rows.empty())
        return 0;
    const std::size_t cols = rows.front().size();
    int rank = 0;
    for (std::size_t col = 0; col < cols && rank < static_cast<int>(rows.size()); ++col) {
        std::size_t pivot = rank;
        while (pivot < rows.size() && rows[pivot][col].numerator() == 0)
            ++pivot;
        if (pivot == rows.size())
            continue;
        std::swap(rows[pivot], rows[rank]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == static_cast<std::size_t>(rank) || rows[r][col].numerator() == 0)
                continue;
            const Rational f = rows[r][col] / rows[rank][col];
            for (std::size_t c = col; c < cols; ++c)
                rows[r][c] -= f * rows[rank][c];
        }
        ++rank;
    }
    return rank;
}

template <class T>
void bracket(const GroupImpl& G, const T* a, const T* b, T* out)
{
    std::fill(out, out + G.N, T(0));
    for (const Entry& e : G.entries) {
        if constexpr (std::is_same_v<T, Rational>)
            out[e.k] += e.exact * a[e.i] * b[e.j];
        else
            out[e.k] += e.c * a[e.i] * b[e.j];
    }
}

// Z = BCH(X, Y) truncated at the group's step. work holds 4N scalars.
template <class T>
void bch(const GroupImpl& G, const T* X, const T* Y, T* Z, T* work)
{
    const int N = G.N;
    for (int k = 0; k < N; ++k)
        Z[k] = X[k] + Y[k];
    if (G.r < 2 || G.entries.empty())
        return;
    T* xy = work;
    bracket(G, X, Y, xy);
    const T half = T(1) / T(2);
    for (int k = 0; k < N; ++k)
        Z[k] += half * xy[k];
    if (G.r < 3)
        return;
    T* xxy = work + N;
    T* yxy = work + 2 * N;
    bracket(G, X, xy, xxy);
    bracket(G, Y, xy, yxy);
    const T twelfth = T(1) / T(12);
    for (int k = 0; k < N; ++k)
        Z[k] += twelfth * (xxy[k] - yxy[k]);
    if (G.r < 4)
        return;
    T* yxxy = work + 3 * N;
    bracket(G, Y, xxy, yxxy);
    const T tw4 = T(1) / T(24);
    for (int k = 0; k < N; ++k)
        Z[k] -= tw4 * yxxy[k];
}

void abs_bracket(const GroupImpl& G, const double* a, const double* b, double* out)
{
    std::fill(out, out + G.N, 0.0);
    for (const Entry& e : G.entries)
        out[e.k] += std::abs(e.c) * a[e.i] * b[e.j];
}

inline double ipow(double x, unsigned e)
{
    double r = 1.0;
    while (e) {
        if (e & 1u)
            r *= x;
        x *= x;
        e >>= 1u;
    }
    return r;
}

inline double root_of_step(double s, int r)
{
    switch (r) {
    case 1:
        return std::sqrt(s);
    case 2:
        return std::sqrt(std::sqrt(s));
    case 3:
        return std::cbrt(std::sqrt(std::sqrt(s)));
    default:
        return std::cbrt(std::sqrt(std::sqrt(std::sqrt(std::sqrt(s)))));
    }
}

inline double root_of_weight(double x, int w)
{
    switch (w) {
    case 1:
        return x;
    case 2:
        return std::sqrt(x);
    case 3:
        return std::cbrt(x);
    default:
        return std::sqrt(std::sqrt(x));
    }
}

double hnorm_impl(const GroupImpl& G, const double* x)
{
    double s = 0.0;
    for (int k = 0; k < G.N; ++k)
        s += ipow(std::abs(x[k]), G.exponents[k]);
    if (s > 1e-250 && s < 1e250)
        return root_of_step(s, G.r);
    double scale = 0.0;
    for (int k = 0; k < G.N; ++k)
        scale = std::max(scale, root_of_weight(std::abs(x[k]), G.weights[k]));
    if (scale == 0.0)
        return 0.0;
    s = 0.0;
    for (int k = 0; k < G.N; ++k)
        s += ipow(std::abs(x[k]) / ipow(scale, G.weights[k]), G.exponents[k]);
    return scale * root_of_step(s, G.r);
}

struct Scratch {
    std::array<double, 6 * kInlineDim> inline_buf;
    std::vector<double> heap;
    double* get(std::size_t n)
    {
        if (n <= inline_buf.size())
            return inline_buf.data();
        heap.resize(n);
        return heap.data();
    }
};

void validate_ref(const std::vector<int>& dims, BasisRef b)
{
    if (b.layer < 1 || b.layer > static_cast<int>(dims.size()) || b.index < 1 ||
        b.index > dims[b.layer - 1])
        throw StratificationError("basis vector " + basis_name(b) + " does not exist");
}

} // namespace

GroupSpec make_group(StrataSpec spec)
{
    if (spec.layer_dims.empty())
        throw StratificationError("layer_dims must be nonempty");
    for (int d : spec.layer_dims)
        if (d <= 0)
            throw StratificationError("layer dimensions must be positive");
    if (spec.layer_dims.size() > static_cast<std::size_t>(kMaxStep))
        throw UnsupportedStep("step " + std::to_string(spec.layer_dims.size()) +
                              " exceeds the supported maximum of 4");

    auto G = std::make_shared<GroupImpl>();
    G->r = static_cast<int>(spec.layer_dims.size());
    for (int layer = 1; layer <= G->r; ++layer) {
        G->offsets.push_back(G->N);
        for (int a = 0; a < spec.layer_dims[layer - 1]; ++a)
            G->weights.push_back(layer);
        G->N += spec.layer_dims[layer - 1];
        G->M += layer * spec.layer_dims[layer - 1];
    }
    const int N = G->N;
    G->c.assign(static_cast<std::size_t>(N) * N * N, Rational(0));

    auto flat = [&](BasisRef b) { return G->offsets[b.layer - 1] + b.index - 1; };

    std::map<std::pair<int, int>, std::vector<Rational>> given;
    for (const BracketRule& rule : spec.brackets) {
        validate_ref(spec.layer_dims, rule.lhs);
        validate_ref(spec.layer_dims, rule.rhs);
        std::vector<Rational> row(N, Rational(0));
        for (const auto& [b, coeff] : rule.terms) {
            validate_ref(spec.layer_dims, b);
            if (coeff.numerator() == 0)
                continue;
            if (b.layer != rule.lhs.layer + rule.rhs.layer)
                throw StratificationError("[" + basis_name(rule.lhs) + ", " + basis_name(rule.rhs) +
                                          "] has a component in layer " + std::to_string(b.layer) +
                                          ", expected layer " +
                                          std::to_string(rule.lhs.layer + rule.rhs.layer));
            row[flat(b)] += coeff;
        }
        const int i = flat(rule.lhs);
        const int j = flat(rule.rhs);
        const bool nonzero = std::any_of(row.begin(), row.end(), [](const Rational& v) { return v.numerator() != 0; });
        if (i == j && nonzero)
            throw StratificationError("[" + basis_name(rule.lhs) + ", " + basis_name(rule.lhs) +
                                      "] must vanish");
        auto [it, inserted] = given.emplace(std::make_pair(i, j), row);
        if (!inserted) {
            for (int k = 0; k < N; ++k)
                it->second[k] += row[k];
        }
    }
    for (const auto& [key, row] : given) {
        const auto [i, j] = key;
        auto other = given.find({j, i});
        for (int k = 0; k < N; ++k) {
            if (other != given.end() && !(other->second[k] == -row[k]))
                throw StratificationError("brackets are not antisymmetric on the pair (" +
                                          std::to_string(i) + ", " + std::to_string(j) + ")");
            G->at(i, j, k) = row[k];
            G->at(j, i, k) = -row[k];
        }
    }

    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
            for (int l = j + 1; l < N; ++l)
                for (int k = 0; k < N; ++k) {
                    Rational s(0);
                    for (int m = 0; m < N; ++m) {
                        s += G->at(j, l, m) * G->at(i, m, k);
                        s += G->at(l, i, m) * G->at(j, m, k);
                        s += G->at(i, j, m) * G->at(l, m, k);
                    }
                    if (s.numerator() != 0)
                        throw JacobiError("Jacobi identity fails on basis triple (" + std::to_string(i) +
                                          ", " + std::to_string(j) + ", " + std::to_string(l) + ")");
                }

    for (int layer = 1; layer < G->r; ++layer) {
        std::vector<std::vector<Rational>> rows;
        const int lo = G->offsets[layer];
        const int dim = spec.layer_dims[layer];
        for (int a = 0; a < spec.layer_dims[0]; ++a)
            for (int b = G->offsets[layer - 1]; b < G->offsets[layer - 1] + spec.layer_dims[layer - 1]; ++b) {
                std::vector<Rational> v(dim);
                for (int k = 0; k < dim; ++k)
                    v[k] = G->at(a, b, lo + k);
                rows.push_back(std::move(v));
            }
        if (rational_rank(rows) != dim)
            throw StratificationError("[V_1, V_" + std::to_string(layer) + "] does not span V_" +
                                      std::to_string(layer + 1));
    }

    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const Rational& v = G->at(i, j, k);
                if (v.numerator() != 0)
                    G->entries.push_back({i, j, k, boost::rational_cast<double>(v), v});
            }

    const int two_r_fact = 2 * factorial(G->r);
    for (int w : G->weights)
        G->exponents.push_back(static_cast<unsigned>(two_r_fact / w));

    G->strata = std::move(spec);
    return GroupSpec(std::move(G));
}

int GroupSpec::N() const { return impl_->N; }
int GroupSpec::M() const { return impl_->M; }
int GroupSpec::step() const { return impl_->r; }
const std::string& GroupSpec::name() const { return impl_->strata.name; }
const StrataSpec& GroupSpec::strata() const { return impl_->strata; }
std::span<const int> GroupSpec::weights() const { return impl_->weights; }
std::span<const int> GroupSpec::layer_dims() const { return impl_->strata.layer_dims; }
int GroupSpec::offset(int layer) const { return impl_->offsets.at(layer - 1); }

int GroupSpec::flat_index(BasisRef b) const
{
    validate_ref(impl_->strata.layer_dims, b);
    return impl_->offsets[b.layer - 1] + b.index - 1;
}

Rational GroupSpec::structure_constant(int i, int j, int k) const { return impl_->at(i, j, k); }

bool GroupSpec::same_as(const GroupSpec& other) const
{
    return impl_ == other.impl_ || (impl_->strata.layer_dims == other.impl_->strata.layer_dims &&
                                    impl_->c == other.impl_->c);
}

double GroupSpec::unit_ball_volume() const
{
    const GroupImpl& G = *impl_;
    std::call_once(G.volume_once, [&G] {
        if (G.r == 1) {
            const double n = G.N;
            G.volume = std::pow(std::numbers::pi, n / 2) / std::tgamma(n / 2 + 1);
            return;
        }
        constexpr std::size_t samples = std::size_t(1) << 21;
        boost::random::sobol qrng(G.N);
        boost::random::uniform_01<double> u01;
        std::vector<double> x(G.N);
        std::size_t inside = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            for (int k = 0; k < G.N; ++k)
                x[k] = 2.0 * u01(qrng) - 1.0;
            if (hnorm_impl(G, x.data()) < 1.0)
                ++inside;
        }
        G.volume = std::ldexp(static_cast<double>(inside) / samples, G.N);
    });
    return G.volume;
}

GroupSpec euclidean(int n)
{
    if (n <= 0)
        throw UnknownName("euclidean dimension must be positive");
    return make_group({{n}, {}, "euclidean(" + std::to_string(n) + ")"});
}

GroupSpec heisenberg()
{
    StrataSpec s{{2, 1}, {}, "heisenberg"};
    s.brackets.push_back({{1, 1}, {1, 2}, {{{2, 1}, Rational(1)}}});
    return make_group(std::move(s));
}

GroupSpec engel()
{
    StrataSpec s{{2, 1, 1}, {}, "engel"};
    s.brackets.push_back({{1, 1}, {1, 2}, {{{2, 1}, Rational(1)}}});
    s.brackets.push_back({{1, 1}, {2, 1}, {{{3, 1}, Rational(1)}}});
    return make_group(std::move(s));
}

GroupSpec builtin(std::string_view name)
{
    std::string n;
    for (char ch : name)
        if (!std::isspace(static_cast<unsigned char>(ch)))
            n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (n == "heisenberg" || n == "h1" || n == "h")
        return heisenberg();
    if (n == "engel")
        return engel();
    for (std::string_view prefix : {"euclidean", "r", "e"}) {
        if (n.rfind(prefix, 0) != 0)
            continue;
        std::string rest = n.substr(prefix.size());
        if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')')
            rest = rest.substr(1, rest.size() - 2);
        int dim = 0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), dim);
        if (!rest.empty() && ec == std::errc() && ptr == rest.data() + rest.size() && dim > 0)
            return euclidean(dim);
    }
    throw UnknownName("unknown group '" + std::string(name) + "'");
}

void check_shape(const GroupSpec& g, std::span<const double> a)
{
    if (static_cast<int>(a.size()) != g.N())
        throw ShapeMismatch("point has " + std::to_string(a.size()) + " coordinates, group " + g.name() +
                            " has dimension " + std::to_string(g.N()));
}

GPoint identity(const GroupSpec& g) { return GPoint(std::vector<double>(g.N(), 0.0)); }

GPoint multiply(const GroupSpec& g, const GPoint& a, const GPoint& b)
{
    check_shape(g, a.coords());
    check_shape(g, b.coords());
    GPoint out(std::vector<double>(g.N()));
    kernel::multiply(g, a.coords(), b.coords(), out.coords());
    return out;
}

GPoint inverse(const GroupSpec& g, const GPoint& a)
{
    check_shape(g, a.coords());
    std::vector<double> c(a.vec());
    for (double& v : c)
        v = -v;
    return GPoint(std::move(c));
}

GPoint dilate(const GroupSpec& g, double t, const GPoint& a)
{
    if (!(t > 0.0))
        throw NonpositiveScale("dilation factor must be positive");
    check_shape(g, a.coords());
    GPoint out(std::vector<double>(g.N()));
    kernel::dilate(g, t, a.coords(), out.coords());
    return out;
}

double hnorm(const GroupSpec& g, const GPoint& a)
{
    check_shape(g, a.coords());
    return kernel::hnorm(g, a.coords());
}

double qdist(const GroupSpec& g, const GPoint& a, const GPoint& b)
{
    check_shape(g, a.coords());
    check_shape(g, b.coords());
    return kernel::qdist(g, a.coords(), b.coords());
}

std::vector<Rational> multiply_exact(const GroupSpec& g, std::span<const Rational> a,
                                     std::span<const Rational> b)
{
    const GroupImpl& G = g.impl();
    if (static_cast<int>(a.size()) != G.N || static_cast<int>(b.size()) != G.N)
        throw ShapeMismatch("rational point does not match group dimension");
    std::vector<Rational> z(G.N), work(4 * G.N);
    bch(G, a.data(), b.data(), z.data(), work.data());
    return z;
}

namespace kernel {

void multiply(const GroupSpec& g, std::span<const double> a, std::span<const double> b, std::span<double> out)
{
    const GroupImpl& G = g.impl();
    thread_local Scratch scratch;
    double* work = scratch.get(4 * static_cast<std::size_t>(G.N));
    bch(G, a.data(), b.data(), out.data(), work);
}

void dilate(const GroupSpec& g, double t, std::span<const double> a, std::span<double> out)
{
    const GroupImpl& G = g.impl();
    double tw[kMaxStep + 1] = {1.0, t, t * t, t * t * t, t * t * t * t};
    for (int k = 0; k < G.N; ++k)
        out[k] = tw[G.weights[k]] * a[k];
}

double hnorm(const GroupSpec& g, std::span<const double> a) { return hnorm_impl(g.impl(), a.data()); }

double qdist(const GroupSpec& g, std::span<const double> a, std::span<const double> b)
{
    const GroupImpl& G = g.impl();
    std::array<double, 6 * kInlineDim> local;
    thread_local Scratch scratch;
    double* buf = static_cast<std::size_t>(G.N) <= kInlineDim ? local.data() : scratch.get(6 * static_cast<std::size_t>(G.N));
    double* neg = buf;
    double* z = buf + G.N;
    for (int k = 0; k < G.N; ++k)
        neg[k] = -a[k];
    bch(G, neg, b.data(), z, buf + 2 * G.N);
    return hnorm_impl(G, z);
}

void translate_bound(const GroupSpec& g, std::span<const double> a, std::span<const double> radius,
                     std::span<double> out)
{
    const GroupImpl& G = g.impl();
    const int N = G.N;
    for (int k = 0; k < N; ++k)
        out[k] = radius[k];
    if (G.r < 2 || G.entries.empty())
        return;
    std::vector<double> A(N), az(N), aaz(N), zaz(N), zaaz(N);
    for (int k = 0; k < N; ++k)
        A[k] = std::abs(a[k]);
    abs_bracket(G, A.data(), radius.data(), az.data());
    for (int k = 0; k < N; ++k)
        out[k] += 0.5 * az[k];
    if (G.r < 3)
        return;
    abs_bracket(G, A.data(), az.data(), aaz.data());
    abs_bracket(G, radius.data(), az.data(), zaz.data());
    for (int k = 0; k < N; ++k)
        out[k] += (aaz[k] + zaz[k]) / 12.0;
    if (G.r < 4)
        return;
    abs_bracket(G, radius.data(), aaz.data(), zaaz.data());
    for (int k = 0; k < N; ++k)
        out[k] += zaaz[k] / 24.0;
}

} // namespace kernel

double AxiomReport::worst() const
{
    return std::max({associativity, identity, inverse, dilation, homogeneity});
}

AxiomReport check_axioms(const GroupSpec& g, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> logscale(std::log(0.25), std::log(4.0));
    const std::size_t N = static_cast<std::size_t>(g.N());
    std::vector<double> a(N), b(N), c(N), e(N, 0.0), ab(N), bc(N), lhs(N), rhs(N), ta(N), tb(N), t1(N);
    auto err = [](std::span<const double> x, std::span<const double> y) {
        double m = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k)
            m = std::max(m, std::abs(x[k] - y[k]) / std::max({1.0, std::abs(x[k]), std::abs(y[k])}));
        return m;
    };
    AxiomReport r;
    r.samples = samples;
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t k = 0; k < N; ++k) {
            a[k] = coord(rng);
            b[k] = coord(rng);
            c[k] = coord(rng);
        }
        const double t = std::exp(logscale(rng));

        kernel::multiply(g, a, b, ab);
        kernel::multiply(g, ab, c, lhs);
        kernel::multiply(g, b, c, bc);
        kernel::multiply(g, a, bc, rhs);
        r.associativity = std::max(r.associativity, err(lhs, rhs));

        kernel::multiply(g, a, e, lhs);
        kernel::multiply(g, e, a, rhs);
        r.identity = std::max({r.identity, err(lhs, a), err(rhs, a)});

        for (std::size_t k = 0; k < N; ++k)
            t1[k] = -a[k];
        kernel::multiply(g, a, t1, lhs);
        kernel::multiply(g, t1, a, rhs);
        r.inverse = std::max({r.inverse, err(lhs, e), err(rhs, e)});

        kernel::dilate(g, t, ab, lhs);
        kernel::dilate(g, t, a, ta);
        kernel::dilate(g, t, b, tb);
        kernel::multiply(g, ta, tb, rhs);
        r.dilation = std::max(r.dilation, err(lhs, rhs));

        const double n = kernel::hnorm(g, a);
        if (n > 0.0)
            r.homogeneity = std::max(r.homogeneity, std::abs(kernel::hnorm(g, ta) - t * n) / (t * n));
    }
    return r;
}

double quasi_triangle_constant(const GroupSpec& g, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> logscale(-2.0, 2.0);
    const int N = g.N();
    std::vector<double> u(N), a(N), b(N), c(N);
    auto draw = [&](std::vector<double>& out) {
        for (int k = 0; k < N; ++k)
            u[k] = coord(rng);
        kernel::dilate(g, std::exp(logscale(rng)), u, out);
    };
    double K = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        draw(a);
        draw(b);
        draw(c);
        const double ab = kernel::qdist(g, a, b);
        const double bc = kernel::qdist(g, b, c);
        const double ac = kernel::qdist(g, a, c);
        if (ab + bc > 0.0)
            K = std::max(K, ac / (ab + bc));
    }
    return K;
}

std::pair<double, double> loglog_fit(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

BallVolumeFit ball_volume_fit(const GroupSpec& g, std::span<const double> radii, std::size_t samples_per_radius,
                              std::uint64_t seed)
{
    BallVolumeFit fit;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    const int N = g.N();
    std::vector<double> x(N);
    for (double R : radii) {
        if (!(R > 0.0))
            throw NonpositiveScale("ball radius must be positive");
        double box = 1.0;
        std::vector<double> half(N);
        for (int k = 0; k < N; ++k) {
            half[k] = std::pow(R, g.weights()[k]);
            box *= 2.0 * half[k];
        }
        std::size_t inside = 0;
        for (std::size_t s = 0; s < samples_per_radius; ++s) {
            for (int k = 0; k < N; ++k)
                x[k] = half[k] * coord(rng);
            if (kernel::hnorm(g, x) < R)
                ++inside;
        }
        fit.radii.push_back(R);
        fit.volumes.push_back(box * static_cast<double>(inside) / static_cast<double>(samples_per_radius));
    }
    std::tie(fit.slope, fit.log_constant) = loglog_fit(fit.radii, fit.volumes);
    return fit;
}

} // namespace carnot
