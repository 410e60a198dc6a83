#include "carnot/capacity.hpp"

#include "carnot/errors.hpp"
#include "carnot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace carnot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Discretized kernel rho(x_i, e_j)^{alpha - M} on a cloud with the cell of each atom removed,
// plus the far-field tail of the L^{s'} norm beyond the cloud radius.
class KernelSystem {
public:
    KernelSystem(const std::vector<std::span<const double>>& atoms, double alpha, double sp, const PointCloud& cloud,
                 bool include_tail)
        : cloud_(cloud), J_(atoms.size()), sp_(sp)
    {
        const GroupSpec& g = cloud.group();
        const int M = g.M();
        const std::size_t n = cloud.size();
        K_.assign(n * J_, 0.0);
        const double e = alpha - M;
        parallel_for(n, [&](std::size_t b, std::size_t end) {
            for (std::size_t i = b; i < end; ++i)
                for (std::size_t j = 0; j < J_; ++j) {
                    const double d = kernel::qdist(g, cloud.point(i), atoms[j]);
                    K_[i * J_ + j] = d > 0.0 ? std::pow(d, e) : 0.0;
                }
        });
        for (std::size_t j = 0; j < J_; ++j) {
            double dn = 0.0;
            const std::size_t s = cloud.nearest(atoms[j], &dn);
            if (dn < 0.5 * cloud.resolution(s))
                K_[s * J_ + j] = 0.0;
        }
        if (include_tail) {
            const double decay = (M - alpha) * sp - M;
            tail_ = decay > 0.0 ? g.unit_ball_volume() * M * std::pow(cloud.radius(), -decay) / decay : kInf;
        }
    }

    double tail_constant() const { return tail_; }

    // ||I mu_w||^{s'} and, when grad is given, g_j = int (I mu_w)^{s'-1} K_j.
    double norm(std::span<const double> w, std::vector<double>* grad, double* tail_part = nullptr) const
    {
        const std::size_t n = cloud_.size();
        u_.resize(n);
        parallel_for(n, [&](std::size_t b, std::size_t end) {
            for (std::size_t i = b; i < end; ++i) {
                double v = 0.0;
                const double* row = K_.data() + i * J_;
                for (std::size_t j = 0; j < J_; ++j)
                    v += row[j] * w[j];
                u_[i] = v;
            }
        });
        double mass = 0.0;
        for (double x : w)
            mass += x;
        double N = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (u_[i] > 0.0)
                N += cloud_.volume(i) * std::pow(u_[i], sp_);
        double T = 0.0;
        if (tail_ != 0.0 && mass > 0.0)
            T = tail_ * std::pow(mass, sp_);
        if (tail_part)
            *tail_part = T;
        if (grad) {
            for (std::size_t i = 0; i < n; ++i)
                u_[i] = u_[i] > 0.0 ? cloud_.volume(i) * std::pow(u_[i], sp_ - 1.0) : 0.0;
            grad->assign(J_, 0.0);
            const double tail_grad = tail_ != 0.0 && mass > 0.0 ? tail_ * std::pow(mass, sp_ - 1.0) : 0.0;
            parallel_for(J_, [&](std::size_t b, std::size_t end) {
                for (std::size_t j = b; j < end; ++j) {
                    double v = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        v += u_[i] * K_[i * J_ + j];
                    (*grad)[j] = v + tail_grad;
                }
            }, 1);
        }
        return N + T;
    }

private:
    const PointCloud& cloud_;
    std::size_t J_;
    double sp_;
    double tail_ = 0.0;
    std::vector<double> K_;
    mutable std::vector<double> u_;
};

std::vector<std::span<const double>> spans(const CompactSet& E)
{
    std::vector<std::span<const double>> out;
    for (const GPoint& x : E.points())
        out.push_back(x.coords());
    return out;
}

double objective(double mass, double N, double s, double sp)
{
    if (!(mass > 0.0))
        return 0.0;
    if (std::isinf(N))
        return 0.0;
    return std::pow(mass, s) / std::pow(N, s / sp);
}

void check_cloud(const CompactSet& E, const PointCloud& cloud)
{
    if (!cloud.group().same_as(E.group()))
        throw ShapeMismatch("set and cloud live on different groups");
    if (cloud.empty())
        throw EmptyCloud("quadrature cloud is empty");
}

} // namespace

void validate(const CapacityParams& P)
{
    if (!(P.alpha > 0.0))
        throw InvalidParams("alpha must be positive");
    if (!(P.s > 1.0))
        throw InvalidParams("s must exceed 1");
}

CompactSet::CompactSet(GroupSpec g, std::vector<GPoint> points, GPoint center, double radius)
    : g_(std::move(g)), points_(std::move(points)), center_(std::move(center)), radius_(radius)
{
    if (points_.empty())
        throw InvalidParams("compact set needs at least one point");
    if (!(radius_ > 0.0))
        throw InvalidParams("enclosing radius must be positive");
    check_shape(g_, center_.coords());
    for (const GPoint& x : points_) {
        check_shape(g_, x.coords());
        if (qdist(g_, center_, x) > radius_ * (1.0 + 1e-12))
            throw InvalidParams("set point outside the enclosing ball");
    }
}

CompactSet CompactSet::dilated(double t) const
{
    if (!(t > 0.0))
        throw NonpositiveScale("dilation factor must be positive");
    const GPoint ci = inverse(g_, center_);
    std::vector<GPoint> pts;
    for (const GPoint& x : points_)
        pts.push_back(multiply(g_, center_, dilate(g_, t, multiply(g_, ci, x))));
    return CompactSet(g_, std::move(pts), center_, radius_ * t);
}

CompactSet CompactSet::united(const CompactSet& other) const
{
    if (!other.group().same_as(g_))
        throw ShapeMismatch("sets live on different groups");
    std::vector<GPoint> pts = points_;
    double r = radius_;
    for (const GPoint& x : other.points()) {
        pts.push_back(x);
        r = std::max(r, qdist(g_, center_, x));
    }
    return CompactSet(g_, std::move(pts), center_, r);
}

std::string_view to_string(Degeneracy d)
{
    return d == Degeneracy::identically_zero ? "identically_zero" : "nondegenerate";
}

std::string_view to_string(Removability r)
{
    return r == Removability::removable_points ? "removable_points" : "non_removable_points";
}

Degeneracy degeneracy_verdict(const CapacityParams& P, int M)
{
    return P.alpha * P.s >= M ? Degeneracy::identically_zero : Degeneracy::nondegenerate;
}

Removability removability_verdict(double p, double q, int M)
{
    if (!(p > 1.0) || !(q > p - 1.0))
        throw InvalidExponents("removability needs q > p - 1 > 0");
    if (!(p < M))
        throw InvalidExponents("removability needs p < M");
    return p * q / (q - p + 1.0) <= M ? Removability::removable_points : Removability::non_removable_points;
}

PointCloud capacity_cloud(const CompactSet& E, const CapacityCloudOptions& o)
{
    if (!(o.spacing > 0.0) || !(o.core_factor > 0.0) || !(o.domain_factor >= o.core_factor))
        throw InvalidParams("capacity cloud needs spacing > 0 and domain_factor >= core_factor > 0");
    LatticeOptions lo;
    lo.kind = o.kind;
    const PointCloud core = lattice_cloud(E.group(), E.center(), o.core_factor, o.spacing, lo);
    const PointCloud full = o.domain_factor > o.core_factor ? with_dyadic_shells(core, o.domain_factor) : core;
    return dilate_cloud(full, E.radius());
}

double dual_objective(const CompactSet& E, std::span<const double> w, const CapacityParams& P, const PointCloud& cloud,
                      bool include_tail)
{
    validate(P);
    check_cloud(E, cloud);
    if (w.size() != E.size())
        throw ShapeMismatch("one weight per set point required");
    const double sp = P.s_conjugate();
    const KernelSystem K(spans(E), P.alpha, sp, cloud, include_tail);
    double mass = 0.0;
    for (double x : w)
        mass += x;
    return objective(mass, K.norm(w, nullptr), P.s, sp);
}

CapacityResult capacity_lower(const CompactSet& E, const CapacityParams& P, const PointCloud& cloud,
                              const CapacityOptions& options)
{
    validate(P);
    check_cloud(E, cloud);
    const int M = E.group().M();
    if (degeneracy_verdict(P, M) == Degeneracy::identically_zero)
        throw DegenerateParams("alpha s >= M: the capacity of every compact set vanishes");
    const std::size_t J = E.size();
    const double sp = P.s_conjugate();
    const KernelSystem K(spans(E), P.alpha, sp, cloud, options.include_tail);

    auto normalized = [](std::vector<double> w) {
        double m = 0.0;
        for (double x : w)
            m += x;
        for (double& x : w)
            x /= m;
        return w;
    };

    CapacityResult out(E.group());
    std::vector<double> w(J, 1.0 / static_cast<double>(J));
    double best = -1.0;
    std::vector<double> best_w;
    if (options.initial) {
        if (options.initial->size() != J)
            throw ShapeMismatch("warm start needs one weight per set point");
        double m = 0.0;
        double top = 0.0;
        for (double x : *options.initial) {
            if (x < 0.0)
                throw InvalidParams("warm start weights must be nonnegative");
            m += x;
            top = std::max(top, x);
        }
        if (m > 0.0) {
            best_w = normalized(*options.initial);
            best = objective(1.0, K.norm(best_w, nullptr), P.s, sp);
            // Zero weights never move under multiplicative updates.
            w = *options.initial;
            for (double& x : w)
                x = std::max(x, 1e-3 * top);
            w = normalized(std::move(w));
        }
    }

    std::vector<double> g;
    double N = K.norm(w, &g);
    double F = objective(1.0, N, P.s, sp);
    out.trace.push_back(F);
    double eta = 1.0;
    std::size_t it = 0;
    bool converged = J == 1;
    while (!converged && it < options.max_iter) {
        ++it;
        std::vector<double> cand(J);
        for (std::size_t j = 0; j < J; ++j)
            cand[j] = g[j] > 0.0 ? w[j] * std::pow(N / g[j], eta) : w[j];
        cand = normalized(std::move(cand));
        std::vector<double> gc;
        const double Nc = K.norm(cand, &gc);
        const double Fc = objective(1.0, Nc, P.s, sp);
        if (Fc >= F) {
            const double change = (Fc - F) / std::max(F, 1e-300);
            w = std::move(cand);
            g = std::move(gc);
            N = Nc;
            F = Fc;
            out.trace.push_back(F);
            if (change < options.tol)
                converged = true;
        } else {
            eta *= 0.5;
            if (eta < 1e-12)
                converged = true;
        }
    }
    if (F >= best) {
        best = F;
        best_w = w;
    }
    out.value = best;
    out.weights = best_w;
    out.iterations = it;
    out.converged = converged;
    double tail = 0.0;
    const double Nb = K.norm(best_w, nullptr, &tail);
    out.tail_fraction = Nb > 0.0 ? tail / Nb : 0.0;
    for (std::size_t j = 0; j < J; ++j)
        out.witness.add(E.point(j), best * best_w[j]);
    return out;
}

ExtremalReport extremal_inequality_check(const AtomicMeasure& mu, double p, double q, double tol,
                                         const PointCloud& cloud, bool include_tail)
{
    if (!(p > 1.0) || !(q > p - 1.0))
        throw InvalidExponents("extremal check needs q > p - 1 > 0");
    if (!cloud.group().same_as(mu.group()))
        throw ShapeMismatch("measure and cloud live on different groups");
    ExtremalReport out;
    out.values.assign(mu.size(), 0.0);
    if (mu.size() == 0 || !(mu.total_mass() > 0.0))
        return out;
    std::vector<std::span<const double>> atoms;
    std::vector<double> w;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        atoms.push_back(mu.point(j));
        w.push_back(mu.mass(j));
    }
    const double sp = q / (p - 1.0);
    const KernelSystem K(atoms, p, sp, cloud, include_tail);
    std::vector<double> g;
    K.norm(w, &g);
    out.values = g;
    out.max_value = *std::max_element(g.begin(), g.end());
    out.within = out.max_value <= 1.0 + tol;
    return out;
}

} // namespace carnot
