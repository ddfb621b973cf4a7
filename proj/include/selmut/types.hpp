#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace selmut {

// A point of the trait space. Positions are stored flat (N*d) and handed
// around as spans into that storage.
using Point = std::span<const double>;
using Vec = std::vector<double>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coefficient or kernel produced a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// The model bundle is missing something an operation needs.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

class DiscretizationError : public Error {
public:
    using Error::Error;
};

class SpacingError : public Error {
public:
    using Error::Error;
};

/// Raised by the time integrator: non-finite state or a tripped invariant monitor.
class IntegrationError : public Error {
public:
    using Error::Error;
};

class OracleFailure : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

/// Invalid arguments or ranges (sizes, tolerances, rules, names).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec lower, Vec upper);

    static Box interval(double a, double b) { return Box({a}, {b}); }
    static Box cube(std::size_t dim, double a, double b);

    std::size_t dim() const { return lo.size(); }
    double width(std::size_t axis) const { return hi[axis] - lo[axis]; }
    bool contains(Point x, double tol = 0.0) const;
    /// Minkowski sum with the closed ball of radius r (as a box: each side grows by r).
    Box dilated(double r) const;
    bool intersects(const Box& other) const;
    Vec center() const;
};

Box hull(const Box& a, const Box& b);

/// Euclidean norm.
double norm(Point v);

}  // namespace selmut
