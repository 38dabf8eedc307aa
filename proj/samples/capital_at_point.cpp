// Stressed PD, LGD and capital at fixed parameters, analytic and by
// Monte Carlo for a 5350-loan portfolio.
//
//   g++ -std=c++20 -O2 -Iinclude samples/capital_at_point.cpp -pthread

#include <cstdio>

#include "lgdcap.hpp"

int main() {
    using namespace lgdcap;
    const ModelParams theta{0.0133, 0.0623, 0.456, 0.457, 0.032};

    const CapitalPoint c = stressed_capital(theta, 0.999);
    std::printf("limit:  PD %.5f  LGD %.5f  EC %.5f\n", c.pd, c.lgd, c.ec);

    const auto q = quantile_given_params(theta, Portfolio::equal_weights(5350), 0.999, 1'000'000, 7);
    std::printf("J=5350: Q %.5f (MC se %.5f)\n", q.value, q.std_error);
}
