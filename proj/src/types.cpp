#include "selmut/types.hpp"

#include <algorithm>
#include <cmath>

namespace selmut {

Box::Box(Vec lower, Vec upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size() || lo.empty()) {
        throw UsageError("Box: lower and upper corners must have the same positive dimension");
    }
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] <= hi[i])) throw UsageError("Box: lower corner exceeds upper corner");
    }
}

Box Box::cube(std::size_t dim, double a, double b) {
    return Box(Vec(dim, a), Vec(dim, b));
}

bool Box::contains(Point x, double tol) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    }
    return true;
}

Box Box::dilated(double r) const {
    Box out = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        out.lo[i] -= r;
        out.hi[i] += r;
    }
    return out;
}

bool Box::intersects(const Box& other) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (other.hi[i] < lo[i] || other.lo[i] > hi[i]) return false;
    }
    return true;
}

Vec Box::center() const {
    Vec c(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
}

Box hull(const Box& a, const Box& b) {
    if (a.dim() != b.dim()) throw UsageError("hull: dimension mismatch");
    Box out = a;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        out.lo[i] = std::min(a.lo[i], b.lo[i]);
        out.hi[i] = std::max(a.hi[i], b.hi[i]);
    }
    return out;
}

double norm(Point v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

}  // namespace selmut
