#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "sparseseg/change.hpp"

using namespace sparseseg;

TEST_CASE("published epochs reproduce the known directions") {
    const ClassStats t1943 = testing::published_stats(testing::published_1943());
    const ClassStats t1972 = testing::published_stats(testing::published_1972());
    const ChangeReport report = compare_epochs(t1943, t1972);

    CHECK(report.waterhole.direction == ChangeDirection::Increase);
    CHECK(report.waterhole.mean_t1 == doctest::Approx(143.77));
    CHECK(report.waterhole.mean_t2 == doctest::Approx(175.27));

    CHECK(report.omuti.direction == ChangeDirection::Decrease);
    CHECK(report.omuti.mean_t1 == doctest::Approx(931.18));
    CHECK(report.omuti.mean_t2 == doctest::Approx(722.82));

    CHECK(report.bigtree.direction == ChangeDirection::Increase);
    CHECK(report.bigtree.mean_t1 == doctest::Approx(85.68));
    CHECK(report.bigtree.mean_t2 == doctest::Approx(107.78));

    CHECK(report.waterhole.delta_count == 273 - 103);
    CHECK(report.bigtree.delta_sum == doctest::Approx(1410616.0 - 230052.0));
}

TEST_CASE("identical epochs are flat") {
    const ClassStats stats = testing::published_stats(testing::published_1943());
    const ChangeReport report = compare_epochs(stats, stats);
    for (ClassId c : kAnnotatedClasses) {
        CHECK(report.row(c).direction == ChangeDirection::Flat);
        CHECK(report.row(c).delta_mean == doctest::Approx(0.0));
        CHECK(report.row(c).delta_count == 0);
        CHECK(report.row(c).delta_sum == doctest::Approx(0.0));
    }
}

TEST_CASE("deltas are antisymmetric under epoch swap") {
    const ClassStats a = testing::published_stats(testing::published_1943());
    const ClassStats b = testing::published_stats(testing::published_1972());
    const ChangeReport ab = compare_epochs(a, b);
    const ChangeReport ba = compare_epochs(b, a);
    for (ClassId c : kAnnotatedClasses) {
        CHECK(ab.row(c).delta_mean == doctest::Approx(-ba.row(c).delta_mean));
        CHECK(ab.row(c).delta_sum == doctest::Approx(-ba.row(c).delta_sum));
        CHECK(ab.row(c).delta_count == -ba.row(c).delta_count);
    }
    CHECK(ab.omuti.direction == ChangeDirection::Decrease);
    CHECK(ba.omuti.direction == ChangeDirection::Increase);
}

TEST_CASE("the flat band only looks at the mean delta") {
    ClassStats a;
    a.waterhole = {100, 0.0, 10, 0.0, 1000.0, 100.0};
    a.omuti = {100, 0.0, 10, 0.0, 1000.0, 100.0};
    a.bigtree = {100, 0.0, 10, 0.0, 1000.0, 100.0};
    ClassStats b = a;
    b.waterhole.polygons = 9999;          // counts do not drive direction
    b.waterhole.mean_area_m2 = 100.004;   // inside the 0.005 band
    b.omuti.mean_area_m2 = 100.006;       // just outside
    const ChangeReport report = compare_epochs(a, b);
    CHECK(report.waterhole.direction == ChangeDirection::Flat);
    CHECK(report.omuti.direction == ChangeDirection::Increase);
}

TEST_CASE("csv and json layouts") {
    const ChangeReport report =
        compare_epochs(testing::published_stats(testing::published_1943()),
                       testing::published_stats(testing::published_1972()));
    const std::string csv = change_to_csv(report);
    CHECK(csv.rfind("class,count_t1,count_t2,mean_t1,mean_t2,sum_t1,sum_t2,direction\n", 0) == 0);
    CHECK(csv.find("waterhole,103,273,143.77,175.27,14809.00,47850.00,increase") !=
          std::string::npos);
    CHECK(csv.find("omuti,205,482,931.18,722.82,190892.00,348398.00,decrease") !=
          std::string::npos);

    const std::string json = change_to_json(report);
    CHECK(json.find("\"direction\":\"increase\"") != std::string::npos);
    CHECK(json.find("\"bigtree\"") != std::string::npos);
}
