#include <catch2/catch_amalgamated.hpp>

#include "splatsim/gaussian_evolution.hpp"

using namespace splatsim;

namespace {

Mat3 random_spd(DetRng& rng) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
    return a * a.transpose() + 0.1 * Mat3::Identity();
}

ShCoeffs random_sh(DetRng& rng, int coeffs) {
    ShCoeffs sh(coeffs);
    for (auto& c : sh)
        for (int ch = 0; ch < 3; ++ch) c[ch] = rng.normal();
    return sh;
}

Vec3 eigenvalues_of(const Mat3& m) {
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(symmetrize(m));
    return es.eigenvalues();
}

} // namespace

TEST_CASE("covariance update", "[evolution]") {
    DetRng rng(51);
    const Mat3 a = random_spd(rng);

    REQUIRE(update_covariance(a, Mat3::Identity()).isApprox(a));
    REQUIRE(update_covariance(a, 2.0 * Mat3::Identity()).isApprox(4.0 * a));

    SECTION("rotations preserve the spectrum") {
        for (int i = 0; i < 100; ++i) {
            const Mat3 r = rng.random_rotation();
            const Vec3 before = eigenvalues_of(a);
            const Vec3 after = eigenvalues_of(update_covariance(a, r));
            REQUIRE((before - after).cwiseAbs().maxCoeff() <= 1e-10 * before.maxCoeff());
        }
    }
    SECTION("composition") {
        for (int i = 0; i < 100; ++i) {
            Mat3 f1 = Mat3::Identity(), f2 = Mat3::Identity();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    f1(r, c) += 0.3 * rng.normal();
                    f2(r, c) += 0.3 * rng.normal();
                }
            const Mat3 direct = update_covariance(a, f2 * f1);
            const Mat3 nested = update_covariance(update_covariance(a, f1), f2);
            REQUIRE((direct - nested).cwiseAbs().maxCoeff() <=
                    1e-10 * std::max(1.0, direct.norm()));
        }
    }
}

TEST_CASE("rotation extraction", "[evolution]") {
    DetRng rng(52);

    SECTION("pure rotation returns itself") {
        for (int i = 0; i < 50; ++i) {
            const Mat3 r = rng.random_rotation();
            REQUIRE((extract_rotation(r) - r).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SECTION("symmetric positive stretch returns identity") {
        REQUIRE((extract_rotation(Vec3(2, 1, 1).asDiagonal()) - Mat3::Identity())
                    .cwiseAbs()
                    .maxCoeff() <= 1e-13);
    }
    SECTION("R^T F is symmetric and R is orthogonal") {
        for (int i = 0; i < 200; ++i) {
            Mat3 f = Mat3::Identity();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) f(r, c) += 0.4 * rng.normal();
            if (f.determinant() <= 0.05) continue;
            const Mat3 rot = extract_rotation(f);
            REQUIRE((rot.transpose() * rot - Mat3::Identity()).norm() < 1e-10);
            REQUIRE(rot.determinant() == Catch::Approx(1.0).margin(1e-10));
            const Mat3 s = rot.transpose() * f;
            REQUIRE((s - s.transpose()).norm() <= 1e-9 * std::max(1.0, f.norm()));
        }
    }
    SECTION("degenerate gradient is rejected") {
        REQUIRE_THROWS_AS(extract_rotation(Mat3::Zero()), SimError);
    }
}

TEST_CASE("sh rotation", "[evolution]") {
    DetRng rng(53);

    SECTION("identity leaves coefficients") {
        const ShCoeffs sh = random_sh(rng, 9);
        const ShCoeffs out = rotate_sh(sh, Mat3::Identity());
        for (std::size_t j = 0; j < sh.size(); ++j)
            for (int ch = 0; ch < 3; ++ch)
                REQUIRE(out[j][ch] == Catch::Approx(sh[j][ch]).margin(1e-15));
    }
    SECTION("band-0-only splats are isotropic") {
        const ShCoeffs sh = random_sh(rng, 1);
        for (int i = 0; i < 20; ++i) {
            const ShCoeffs out = rotate_sh(sh, rng.random_rotation());
            REQUIRE(out == sh);
        }
    }
    SECTION("four quarter turns about z are the identity") {
        Mat3 rz90;
        rz90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
        const ShCoeffs sh = random_sh(rng, 4);
        ShCoeffs cur = sh;
        for (int i = 0; i < 4; ++i) cur = rotate_sh(cur, rz90);
        for (std::size_t j = 0; j < sh.size(); ++j)
            for (int ch = 0; ch < 3; ++ch)
                REQUIRE(cur[j][ch] == Catch::Approx(sh[j][ch]).margin(1e-12));
    }
    SECTION("composition on bands 0-1") {
        for (int i = 0; i < 100; ++i) {
            const Mat3 r1 = rng.random_rotation();
            const Mat3 r2 = rng.random_rotation();
            const ShCoeffs sh = random_sh(rng, 4);
            const ShCoeffs direct = rotate_sh(sh, Mat3(r2 * r1));
            const ShCoeffs nested = rotate_sh(rotate_sh(sh, r1), r2);
            for (std::size_t j = 0; j < sh.size(); ++j)
                for (int ch = 0; ch < 3; ++ch)
                    REQUIRE(direct[j][ch] == Catch::Approx(nested[j][ch]).margin(1e-10));
        }
    }
    SECTION("bands >= 2 pass through unchanged") {
        const ShCoeffs sh = random_sh(rng, 16);
        const ShCoeffs out = rotate_sh(sh, rng.random_rotation());
        for (std::size_t j = 4; j < sh.size(); ++j) REQUIRE(out[j] == sh[j]);
    }
    SECTION("band-0 display color is rotation invariant") {
        const ShCoeffs sh = random_sh(rng, 4);
        const auto before = base_color_of(sh);
        for (int i = 0; i < 20; ++i) {
            Mat3 f = Mat3::Identity();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) f(r, c) += 0.3 * rng.normal();
            if (f.determinant() <= 0.05) continue;
            const auto after = base_color_of(rotate_sh(sh, extract_rotation(f)));
            for (int ch = 0; ch < 3; ++ch) REQUIRE(after[ch] == before[ch]);
        }
    }
}
