#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sparseseg/filter.hpp"

using namespace sparseseg;

namespace {

std::vector<PValueRecord> records_from(const std::vector<double>& pvalues, ClassId cls) {
    std::vector<PValueRecord> records;
    for (double p : pvalues) {
        records.push_back({cls, 0.0, p});
    }
    return records;
}

}  // namespace

TEST_CASE("empirical p-value worked examples") {
    const std::vector<double> reference = {10, 20, 30};
    CHECK(empirical_pvalue(5, reference) == doctest::Approx(1.0));
    CHECK(empirical_pvalue(40, reference) == doctest::Approx(0.25));
    CHECK(empirical_pvalue(20, reference) == doctest::Approx(0.75));  // tie counts
    CHECK_THROWS_WITH_AS(empirical_pvalue(1.0, {}), doctest::Contains("EmptyReference"), Error);
}

TEST_CASE("empirical p-value matches the rank oracle on random cases") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> reference(n);
        for (double& a : reference) {
            a = static_cast<double>(rng() % 500) * 0.5;
        }
        const double query = static_cast<double>(rng() % 500) * 0.5;
        CHECK(empirical_pvalue(query, reference) == testing::pvalue_oracle(query, reference));
    }
}

TEST_CASE("empirical p-value bounds and monotonicity") {
    std::mt19937 rng(55);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> reference(n);
        for (double& a : reference) {
            a = static_cast<double>(rng() % 1000) * 0.25;
        }
        const double a1 = static_cast<double>(rng() % 1000) * 0.25;
        const double a2 = a1 + static_cast<double>(rng() % 100) * 0.25;

        const double p1 = empirical_pvalue(a1, reference);
        const double p2 = empirical_pvalue(a2, reference);
        CHECK(p1 >= 1.0 / static_cast<double>(n + 1));
        CHECK(p1 <= 1.0);
        CHECK(p2 <= p1);  // larger areas never rank higher

        // Adding the query itself raises the count by exactly one.
        std::vector<double> with_copy = reference;
        with_copy.push_back(a1);
        const double numer_before = p1 * static_cast<double>(n + 1);
        const double numer_after = empirical_pvalue(a1, with_copy) * static_cast<double>(n + 2);
        CHECK(numer_after == doctest::Approx(numer_before + 1.0));
    }
}

TEST_CASE("filter keeps everything when the spread is zero") {
    const auto records = records_from({0.4, 0.4, 0.4, 0.4}, ClassId::BigTree);
    const FilterOutcome out = filter_by_threshold(records, 0.5);
    CHECK(out.kept.size() == 4);
    CHECK(out.discarded.empty());
    CHECK(out.report.for_class(ClassId::BigTree).sigma == doctest::Approx(0.0));
}

TEST_CASE("filter discards the extremes of the worked example") {
    const auto records = records_from({0.1, 0.5, 0.5, 0.5, 0.9}, ClassId::Waterhole);
    const FilterOutcome out = filter_by_threshold(records, 1.0);
    // mu = 0.5, population sigma = sqrt(0.32/5) ~= 0.253: 0.1 and 0.9 fall outside.
    CHECK(out.report.for_class(ClassId::Waterhole).mu == doctest::Approx(0.5));
    CHECK_NEAR(out.report.for_class(ClassId::Waterhole).sigma, 0.25298, 1e-4);
    REQUIRE(out.kept.size() == 3);
    for (const PValueRecord& r : out.kept) {
        CHECK(r.pvalue == doctest::Approx(0.5));
    }
    CHECK(out.discarded.size() == 2);
    CHECK(out.report.for_class(ClassId::Waterhole).n_input == 5);
    CHECK(out.report.for_class(ClassId::Waterhole).n_kept == 3);
    CHECK(out.report.for_class(ClassId::Waterhole).n_discarded == 2);
}

TEST_CASE("an enormous threshold keeps everything") {
    const auto records = records_from({0.01, 0.2, 0.5, 0.77, 0.99}, ClassId::Omuti);
    const FilterOutcome out = filter_by_threshold(records, 1e18);
    CHECK(out.kept.size() == records.size());
    CHECK(out.discarded.empty());
}

TEST_CASE("kept sets are nested as the threshold loosens") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PValueRecord> records;
        const std::size_t n = 3 + rng() % 30;
        for (std::size_t i = 0; i < n; ++i) {
            const ClassId cls = kAnnotatedClasses[rng() % 3];
            records.push_back({cls, 0.0, static_cast<double>(rng() % 1000) / 1000.0});
        }
        const double e1 = 0.25 + (rng() % 100) / 100.0;
        const double e2 = e1 + (rng() % 100) / 100.0 + 0.01;
        const FilterOutcome tight = filter_by_threshold(records, e1);
        const FilterOutcome loose = filter_by_threshold(records, e2);
        CHECK(std::includes(loose.kept_indices.begin(), loose.kept_indices.end(),
                            tight.kept_indices.begin(), tight.kept_indices.end()));
        CHECK(tight.kept.size() + tight.discarded.size() == records.size());
    }
}

TEST_CASE("filtering is per class") {
    std::vector<PValueRecord> records = records_from({0.1, 0.5, 0.5, 0.5, 0.9}, ClassId::Waterhole);
    // A degenerate omuti cluster must keep its own (zero) spread rather than
    // inherit the waterhole statistics.
    for (double p : {0.44, 0.44, 0.44}) {
        records.push_back({ClassId::Omuti, 0.0, p});
    }
    const FilterOutcome out = filter_by_threshold(records, 1.0);
    CHECK(out.report.for_class(ClassId::Omuti).mu == doctest::Approx(0.44));
    CHECK(out.report.for_class(ClassId::Omuti).sigma == doctest::Approx(0.0));
    CHECK(out.report.for_class(ClassId::Omuti).n_discarded == 0);
    CHECK(out.report.for_class(ClassId::Waterhole).mu == doctest::Approx(0.5));
    CHECK(out.report.for_class(ClassId::Waterhole).n_discarded == 2);
}

TEST_CASE("pvalue histogram") {
    std::vector<PValueRecord> point_mass = records_from({1.0, 1.0, 1.0, 1.0}, ClassId::BigTree);
    const PValueHistogram h = pvalue_histogram(point_mass, 10);
    CHECK(h.for_class(ClassId::BigTree).back() == 4);

    std::vector<double> uniform;
    for (int i = 0; i < 10; ++i) {
        uniform.push_back(0.05 + 0.1 * i);
    }
    const PValueHistogram u = pvalue_histogram(records_from(uniform, ClassId::Omuti), 10);
    for (std::int64_t c : u.for_class(ClassId::Omuti)) {
        CHECK(c == 1);
    }

    std::mt19937 rng(5);
    std::vector<PValueRecord> random_records;
    for (int i = 0; i < 137; ++i) {
        random_records.push_back(
            {kAnnotatedClasses[rng() % 3], 0.0, static_cast<double>(rng() % 1001) / 1000.0});
    }
    const PValueHistogram r = pvalue_histogram(random_records, 7);
    std::int64_t total = 0;
    for (ClassId c : kAnnotatedClasses) {
        for (std::int64_t v : r.for_class(c)) {
            total += v;
        }
    }
    CHECK(total == 137);

    CHECK_THROWS_WITH_AS(pvalue_histogram(random_records, 0), doctest::Contains("InvalidBinCount"),
                         Error);
}

TEST_CASE("filter report serializes per class") {
    const auto records = records_from({0.2, 0.8}, ClassId::Waterhole);
    const FilterOutcome out = filter_by_threshold(records, 1.0);
    const std::string json = filter_report_json(out.report);
    CHECK(json.find("\"waterhole\"") != std::string::npos);
    CHECK(json.find("\"n_input\":2") != std::string::npos);
    CHECK(json.find("\"e_th\":1.0") != std::string::npos);
}
