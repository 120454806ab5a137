#pragma once

namespace weakstrat {

// Compensated (Kahan) accumulator. Running sums of Riemann-type schemes are
// accumulated left to right through this, which keeps telescoping identities
// inside a ~1e-10 budget even at the largest grids.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum; }
};

} // namespace weakstrat
