#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sparseseg/weights.hpp"

using namespace sparseseg;

TEST_CASE("published 1943 pixel counts give the derived weights") {
    PixelCounts counts;
    counts.waterhole = 39776;
    counts.omuti = 483095;
    counts.bigtree = 580251;
    // Labeled fraction of the 1943 grid is 0.97%; back out the unknowns.
    const std::int64_t n_k = counts.labeled();
    const auto total = static_cast<std::int64_t>(std::llround(n_k / 0.0097));
    counts.unknown = total - n_k;

    const ClassWeights w = class_weights(counts);
    CHECK_NEAR(w.lambda_w, 27.733, 0.005);
    CHECK_NEAR(w.lambda_o, 2.283, 0.005);
    CHECK_NEAR(w.lambda_b, 1.901, 0.005);
    CHECK_NEAR(w.lambda_u, 0.0097, 0.0002);
    CHECK(w.lambda_u < 1.0);
}

TEST_CASE("equal counts give weight 3 for every class") {
    PixelCounts counts;
    counts.waterhole = counts.omuti = counts.bigtree = 1000;
    counts.unknown = 5000;
    const ClassWeights w = class_weights(counts);
    CHECK(w.lambda_w == doctest::Approx(3.0));
    CHECK(w.lambda_o == doctest::Approx(3.0));
    CHECK(w.lambda_b == doctest::Approx(3.0));
}

TEST_CASE("a missing class aborts the computation") {
    PixelCounts counts;
    counts.waterhole = 10;
    counts.omuti = 0;
    counts.bigtree = 7;
    CHECK_THROWS_WITH_AS(class_weights(counts), doctest::Contains("MissingClass"), Error);
}

TEST_CASE("weighted counts sum back to three times the labeled total") {
    PixelCounts counts;
    counts.waterhole = 123;
    counts.omuti = 45678;
    counts.bigtree = 9012;
    counts.unknown = 999999;
    const ClassWeights w = class_weights(counts);
    const double sum = static_cast<double>(counts.waterhole) * w.lambda_w +
                       static_cast<double>(counts.omuti) * w.lambda_o +
                       static_cast<double>(counts.bigtree) * w.lambda_b;
    CHECK(sum == doctest::Approx(3.0 * static_cast<double>(counts.labeled())).epsilon(1e-12));
}

TEST_CASE("permuting class counts permutes the weights") {
    PixelCounts a;
    a.waterhole = 100;
    a.omuti = 200;
    a.bigtree = 700;
    a.unknown = 10000;
    PixelCounts b;  // waterhole <-> bigtree swapped
    b.waterhole = 700;
    b.omuti = 200;
    b.bigtree = 100;
    b.unknown = 10000;
    const ClassWeights wa = class_weights(a);
    const ClassWeights wb = class_weights(b);
    CHECK(wa.lambda_w == doctest::Approx(wb.lambda_b));
    CHECK(wa.lambda_b == doctest::Approx(wb.lambda_w));
    CHECK(wa.lambda_o == doctest::Approx(wb.lambda_o));
    CHECK(wa.lambda_u == doctest::Approx(wb.lambda_u));
}

TEST_CASE("scaling all counts leaves the weights unchanged") {
    PixelCounts base;
    base.waterhole = 321;
    base.omuti = 654;
    base.bigtree = 987;
    base.unknown = 50000;
    const ClassWeights w0 = class_weights(base);
    for (std::int64_t k : {2, 3, 8, 25}) {
        PixelCounts scaled;
        scaled.waterhole = base.waterhole * k;
        scaled.omuti = base.omuti * k;
        scaled.bigtree = base.bigtree * k;
        scaled.unknown = base.unknown * k;
        const ClassWeights w = class_weights(scaled);
        CHECK(w.lambda_w == doctest::Approx(w0.lambda_w).epsilon(1e-14));
        CHECK(w.lambda_o == doctest::Approx(w0.lambda_o).epsilon(1e-14));
        CHECK(w.lambda_b == doctest::Approx(w0.lambda_b).epsilon(1e-14));
        CHECK(w.lambda_u == doctest::Approx(w0.lambda_u).epsilon(1e-14));
    }
}

TEST_CASE("uniform weights are all one") {
    const ClassWeights w = ClassWeights::uniform();
    CHECK(w.lambda_u == 1.0);
    CHECK(w.for_class(ClassId::Waterhole) == 1.0);
    CHECK(w.for_class(ClassId::BigTree) == 1.0);
}

TEST_CASE("the optional cap clamps only the class weights") {
    PixelCounts counts;
    counts.waterhole = 10;
    counts.omuti = 1000;
    counts.bigtree = 2000;
    counts.unknown = 100000;
    const ClassWeights raw = class_weights(counts);
    CHECK(raw.lambda_w > 100.0);
    const ClassWeights capped = class_weights(counts, 50.0);
    CHECK(capped.lambda_w == doctest::Approx(50.0));
    CHECK(capped.lambda_o == doctest::Approx(raw.lambda_o));
    CHECK(capped.lambda_u == doctest::Approx(raw.lambda_u));
    CHECK_THROWS_WITH_AS(class_weights(counts, -1.0), doctest::Contains("InvalidWeightCap"),
                         Error);
}
