#ifndef AMLEVY_REPORT_HPP
#define AMLEVY_REPORT_HPP

#include <string>
#include <vector>

namespace amlevy {

// One checked quantity: measured against target within tolerance.
struct Assertion {
    std::string name;
    double measured = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

inline Assertion at_least(std::string name, double measured, double bound, double tol = 0.0)
{
    return {std::move(name), measured, bound, tol, measured >= bound - tol};
}

inline Assertion at_most(std::string name, double measured, double bound, double tol = 0.0)
{
    return {std::move(name), measured, bound, tol, measured <= bound + tol};
}

inline Assertion near(std::string name, double measured, double target, double tol)
{
    const double d = measured - target;
    return {std::move(name), measured, target, tol, d <= tol && d >= -tol};
}

inline bool all_pass(const std::vector<Assertion>& v)
{
    for (const auto& a : v)
        if (!a.pass)
            return false;
    return true;
}

} // namespace amlevy

#endif
