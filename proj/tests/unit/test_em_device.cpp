#include <gtest/gtest.h>

#include "cqsim/em_device.hpp"
#include "cqsim/lti.hpp"

using namespace cqsim;

TEST(SyntheticEddy, FourCellsByHand) {
    const auto m = build_synthetic_eddy({.n_cells = 4});
    // nodes at -1/2, 0, 1/2; h = 1/2; the outer two conduct
    Matrix M(3, 3), K(3, 3), B1(3, 1);
    M << 0.5, 0, 0,
         0, 0, 0,
         0, 0, 0.5;
    K << 4, -2, 0,
         -2, 4, -2,
         0, -2, 4;
    B1 << 0, 0, 1;
    EXPECT_EQ(m.M_sigma, M);
    EXPECT_EQ(m.K_nu, K);
    EXPECT_EQ(m.B1, B1);
    EXPECT_EQ(m.B2, Matrix::Constant(1, 1, 2.0));
}

TEST(SyntheticEddy, Deterministic) {
    const auto a = build_synthetic_eddy({});
    const auto b = build_synthetic_eddy({});
    EXPECT_EQ(a.M_sigma, b.M_sigma);
    EXPECT_EQ(a.K_nu, b.K_nu);
    EXPECT_EQ(a.B1, b.B1);
}

TEST(SyntheticEddy, StaticLimitAndPassivity) {
    const auto m = build_synthetic_eddy({});
    EXPECT_NEAR(std::abs(solid_transfer(m, 0.0)(0, 0) - m.B2(0, 0)), 0.0, 1e-12);
    for (double w : {0.1, 1.0, 10.0, 100.0}) {
        EXPECT_GE(solid_transfer(m, Complex(0.0, w))(0, 0).real(), 0.0) << w;
    }
}

TEST(SyntheticEddy, RejectsTooCoarseGrid) {
    EXPECT_THROW(build_synthetic_eddy({.n_cells = 3}), Error);
    EXPECT_THROW(build_synthetic_transformer(7), Error);
}

TEST(SyntheticTransformer, ReciprocalAndCoupled) {
    const auto m = build_synthetic_transformer(100);
    for (Complex s : {Complex(0.5, 0.0), Complex(0.0, 1.0), Complex(2.0, 5.0), Complex(0.1, -20.0)}) {
        const CMatrix k = stranded_transfer(m, s);
        EXPECT_LE(std::abs(k(0, 1) - k(1, 0)), 1e-12 * k.norm());
    }
    EXPECT_GT(std::abs(stranded_transfer(m, Complex(0.0, 1.0))(0, 1)), 0.0);
}

TEST(SyntheticTransformer, SwappingWindingsPermutesTransfer) {
    const auto m = build_synthetic_transformer(60);
    Matrix swapped(m.B3().rows(), 2);
    swapped.col(0) = m.B3().col(1);
    swapped.col(1) = m.B3().col(0);
    const StrandedConductorModel w(m.M_sigma(), m.K_nu(), swapped);
    const Complex s(0.3, 2.0);
    const CMatrix k = stranded_transfer(m, s);
    const CMatrix kw = stranded_transfer(w, s);
    EXPECT_LT(std::abs(kw(0, 0) - k(1, 1)), 1e-12 * k.norm());
    EXPECT_LT(std::abs(kw(0, 1) - k(1, 0)), 1e-12 * k.norm());
}

TEST(SyntheticModels, ConjugateSymmetryOfDescriptors) {
    for (const char* spec : {"synthetic", "synthetic:eddy:50", "synthetic:transformer:30"}) {
        const auto sys = resolve_device_model(spec, ".");
        const Complex s(0.4, 3.0);
        const CMatrix k = transfer_eval(sys, s);
        EXPECT_LE((transfer_eval(sys, std::conj(s)) - k.conjugate()).norm(), 1e-12 * k.norm()) << spec;
    }
}

TEST(ResolveDeviceModel, PresetsAndErrors) {
    EXPECT_EQ(resolve_device_model("synthetic", ".").inputs(), 1);
    EXPECT_EQ(resolve_device_model("synthetic:eddy:40", ".").states(), 40);
    EXPECT_EQ(resolve_device_model("synthetic:transformer", ".").inputs(), 2);
    EXPECT_THROW(resolve_device_model("synthetic:coil", "."), Error);
    EXPECT_THROW(resolve_device_model("synthetic:eddy:x", "."), Error);
    EXPECT_THROW(resolve_device_model("no/such/manifest", "."), Error);
}
