#include "dcemap/error.hpp"
#include "dcemap/model.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <functional>

#include <cmath>
#include <limits>
#include <random>

namespace dcemap {
namespace {

constexpr GammaVariateParams kReference{300.0, 12.0, 3.0};

GammaVariateParams random_params(std::mt19937_64& rng, double alpha_lo, double alpha_hi) {
    std::uniform_real_distribution<double> y(10.0, 800.0), tp(1.0, 40.0);
    std::uniform_real_distribution<double> la(std::log(alpha_lo), std::log(alpha_hi));
    return {y(rng), tp(rng), std::exp(la(rng))};
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
    try {
        f();
        ADD_FAILURE() << "expected " << error_message(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

TEST(EvalModel, PeakOnsetAndMidpoint) {
    EXPECT_EQ(eval_model(kReference, 12.0), 300.0);
    EXPECT_EQ(eval_model(kReference, 0.0), 0.0);
    // 300 * 0.5^3 * e^1.5, evaluated at 40 digits.
    EXPECT_NEAR(eval_model(kReference, 6.0), 168.0633401376774308, 1e-11);
}

TEST(EvalModel, ZeroAlphaIsConstant) {
    const GammaVariateParams flat{250.0, 10.0, 0.0};
    EXPECT_EQ(eval_model(flat, 0.0), 250.0);
    EXPECT_EQ(eval_model(flat, 3.0), 250.0);
    EXPECT_EQ(eval_model(flat, 90.0), 250.0);
}

TEST(EvalModel, RejectsNonFiniteInput) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    expect_code(ErrorCode::InvalidArgument, [&] { eval_model(kReference, nan); });
    expect_code(ErrorCode::InvalidArgument, [&] { eval_model({nan, 12.0, 3.0}, 1.0); });
    expect_code(ErrorCode::InvalidArgument, [&] { eval_model({300.0, 0.0, 3.0}, 1.0); });
    expect_code(ErrorCode::InvalidArgument, [&] { eval_model({300.0, 12.0, -1.0}, 1.0); });
    expect_code(ErrorCode::InvalidArgument, [&] { eval_model(kReference, -1.0); });
}

TEST(EvalModel, PeakIdentityAndUnimodality) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_params(rng, 0.1, 50.0);
        EXPECT_EQ(eval_model(p, p.t_peak), p.y_max);
        double prev = eval_model(p, 0.0);
        for (int i = 1; i < 1000; ++i) {
            const double v = eval_model(p, p.t_peak * i / 1000.0);
            ASSERT_GT(v, prev) << "rising edge, i=" << i;
            prev = v;
        }
        prev = p.y_max;
        for (int i = 1; i <= 1000; ++i) {
            const double v = eval_model(p, p.t_peak * (1.0 + i / 1000.0));
            ASSERT_LT(v, prev) << "falling edge, i=" << i;
            prev = v;
        }
    }
}

TEST(EvalModel, MatchesLongDoubleOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto p = random_params(rng, 0.2, 30.0);
        const double t = std::uniform_real_distribution<double>(0.01, 5.0)(rng) * p.t_peak;
        const double expected = static_cast<double>(oracle::model(p, t));
        EXPECT_NEAR(eval_model(p, t), expected, 1e-12 * p.y_max + 1e-13 * std::abs(expected));
    }
}

TEST(EvalGradient, VanishesAtThePeak) {
    const auto g = eval_gradient(kReference, 12.0);
    EXPECT_EQ(g[0], 1.0);
    EXPECT_EQ(g[1], 0.0);
    EXPECT_EQ(g[2], 0.0);
}

TEST(EvalGradient, UnitParamsClosedForm) {
    // m(2) = 2 e^-1 and dm/dt_peak = m * 1 * (2 - 1) / 1.
    const auto g = eval_gradient({1.0, 1.0, 1.0}, 2.0);
    EXPECT_NEAR(g[1], 0.7357588823428846432, 1e-15);
}

TEST(EvalGradient, MatchesFiniteDifferences) {
    const auto fd = oracle::finite_difference_gradient(kReference, 6.0);
    const auto g = eval_gradient(kReference, 6.0);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_LT(std::abs(g[k] - fd[k]), 1e-5 * std::abs(fd[k])) << "component " << k;
    }

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 0.1, 50.0);
        const double u = std::exp(std::uniform_real_distribution<double>(std::log(0.01), std::log(10.0))(rng));
        const double t = u * p.t_peak;
        const auto a = eval_gradient(p, t);
        const auto f = oracle::finite_difference_gradient(p, t);
        for (std::size_t k = 0; k < 3; ++k) {
            const double scale = std::max(std::abs(f[k]), 1e-12 * std::abs(p.y_max));
            EXPECT_LT(std::abs(a[k] - f[k]), 1e-5 * scale) << "trial " << trial << " k " << k;
        }
    }
}

TEST(EvalGradient, UndefinedOnTheBoundary) {
    expect_code(ErrorCode::GradientUndefined, [] { eval_gradient(kReference, 0.0); });
    expect_code(ErrorCode::GradientUndefined, [] { eval_gradient({300.0, 12.0, 0.0}, 5.0); });
}

TEST(ResidenceTime, ClosedForm) {
    EXPECT_DOUBLE_EQ(residence_time({300.0, 10.0, 2.0}), 15.0);
    EXPECT_NEAR(residence_time({300.0, 10.0, 1e9}), 10.0, 1e-7);
    EXPECT_EQ(residence_time({300.0, 10.0, 2.0}), residence_time({17.0, 10.0, 2.0}));
}

TEST(ResidenceTime, DegenerateShapeIsInfinite) {
    EXPECT_TRUE(std::isinf(residence_time({300.0, 10.0, 1e-6})));
    EXPECT_TRUE(std::isinf(residence_time({300.0, 10.0, 0.0})));
    EXPECT_TRUE(std::isfinite(residence_time({300.0, 10.0, 2e-6})));
}

TEST(ResidenceTimeQuadrature, ReferenceValues) {
    EXPECT_NEAR(residence_time_quadrature({300.0, 10.0, 2.0}, 500.0, 100000), 15.0, 15.0 * 1e-6);
    EXPECT_NEAR(residence_time_quadrature({1.0, 1.0, 5.0}, 50.0, 100000), 1.2, 1.2 * 1e-6);
}

TEST(ResidenceTimeQuadrature, ShortWindowIsTooCoarse) {
    expect_code(ErrorCode::TruncationTooCoarse,
                [] { residence_time_quadrature({300.0, 10.0, 2.0}, 20.0, 100000); });
    expect_code(ErrorCode::TruncationTooCoarse,
                [] { residence_time_quadrature({300.0, 10.0, 2.0}, 120.0, 100000); });
    expect_code(ErrorCode::InvalidArgument,
                [] { residence_time_quadrature({300.0, 10.0, 2.0}, 500.0, 999); });
}

TEST(ResidenceTimeQuadrature, AgreesWithClosedForm) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 0.2, 50.0);
        const double t_upper = p.t_peak * (50.0 + 100.0 / p.alpha);
        const double q = residence_time_quadrature(p, t_upper, 100001);
        EXPECT_LT(std::abs(q - residence_time(p)), 1e-6 * residence_time(p)) << "alpha " << p.alpha;
    }
}

TEST(ArrivalTime, ReferenceValue) {
    // Long-double bisection to 1e-10 s gives 1.0369258344 s (u = 0.086410486).
    const double t01 = arrival_time_t01(kReference);
    EXPECT_NEAR(t01, 1.0369258344208625, 1e-9);
    EXPECT_NEAR(t01, oracle::arrival_time_bisection(kReference, 0.01, 1e-12), 1e-10);
}

TEST(ArrivalTime, DefiningEquation) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_params(rng, 0.1, 200.0);
        const double t01 = arrival_time_t01(p);
        EXPECT_GT(t01, 0.0);
        EXPECT_LT(t01, p.t_peak);
        EXPECT_LE(std::abs(eval_model(p, t01) - 0.01 * p.y_max), 1e-8 * p.y_max);
    }
}

TEST(ArrivalTime, MonotoneLimits) {
    const double near_peak = arrival_time_t01(kReference, 0.999999);
    EXPECT_LT(near_peak, 12.0);
    EXPECT_GT(near_peak, 11.9);
    const double near_zero = arrival_time_t01(kReference, 1e-12);
    EXPECT_GT(near_zero, 0.0);
    EXPECT_LT(near_zero, 0.01);
    double prev = 0.0;
    for (double f : {1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.5, 0.9, 0.99}) {
        const double t = arrival_time_t01(kReference, f);
        EXPECT_GT(t, prev);
        prev = t;
    }
}

TEST(ArrivalTime, Errors) {
    expect_code(ErrorCode::ConstantCurve, [] { arrival_time_t01({300.0, 12.0, 0.0}); });
    expect_code(ErrorCode::InvalidArgument, [] { arrival_time_t01(kReference, 0.0); });
    expect_code(ErrorCode::InvalidArgument, [] { arrival_time_t01(kReference, 1.0); });
}

TEST(DerivedParams, AmplitudeInvarianceAndTimeScaling) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 0.2, 40.0);
        const double c = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
        GammaVariateParams scaled = p;
        scaled.y_max *= c;
        EXPECT_EQ(arrival_time_t01(scaled), arrival_time_t01(p));
        EXPECT_EQ(residence_time(scaled), residence_time(p));
        const double t = 0.7 * p.t_peak;
        EXPECT_NEAR(eval_model(scaled, t), c * eval_model(p, t), 1e-12 * std::abs(c * p.y_max));

        GammaVariateParams stretched = p;
        stretched.t_peak *= c;
        EXPECT_NEAR(arrival_time_t01(stretched), c * arrival_time_t01(p), 1e-12 * c * p.t_peak);
        EXPECT_NEAR(residence_time(stretched), c * residence_time(p), 1e-12 * c * residence_time(p));
    }
}

TEST(DerivedParams, OrderingInvariants) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(rng, 0.05, 100.0);
        const DerivedParams d = derive_params(p);
        ASSERT_TRUE(d.t01.has_value());
        EXPECT_GT(*d.t01, 0.0);
        EXPECT_LT(*d.t01, p.t_peak);
        EXPECT_GE(d.rt, p.t_peak);
    }
    const DerivedParams flat = derive_params({300.0, 12.0, 0.0});
    EXPECT_FALSE(flat.t01.has_value());
    EXPECT_TRUE(std::isinf(flat.rt));
}

}  // namespace
}  // namespace dcemap
