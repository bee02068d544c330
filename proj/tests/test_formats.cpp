#include <doctest.h>

#include "perclab/csv.hpp"
#include "perclab/manifest.hpp"

using namespace perclab;

TEST_CASE("csv builder produces stable bytes") {
    auto build = [] {
        CsvBuilder csv({"label", "x", "p_hat"});
        csv.row({"eps=1/16", fmt_double(0.0625), fmt_double(0.123456789012345)});
        csv.row({"eps=1/8", fmt_double(0.125), fmt_double(0.5)});
        return csv.str();
    };
    const std::string a = build();
    const std::string b = build();
    CHECK(a == b);
    CHECK(a.substr(0, a.find('\n')) == "label,x,p_hat");
    CHECK(a.find("0.123456789012") != std::string::npos);
}

TEST_CASE("csv builder rejects ragged rows") {
    CsvBuilder csv({"a", "b"});
    CHECK_THROWS_AS(csv.row({"1"}), std::invalid_argument);
}

TEST_CASE("run config survives a manifest round trip") {
    RunConfig c;
    c.command = "one-arm";
    c.mesh = "1/512";
    c.n = 200000;
    c.seed = "0xDEADBEEF";
    c.workers = 4;
    c.eps = {"1/16", "1/8", "1/4", "1/2"};
    c.points = {"0,0.5", "0.25,0.25"};
    c.bulk = {"0,1/4"};
    c.boundary = {"0", "1/4"};
    c.domain = "disk:0,0,1";
    c.z = "0,1";
    c.box_factor = "4";
    c.scale = "2";
    c.patch = "all";
    c.event = "anchored";
    c.bootstrap = true;
    c.slope_target = "-5/48";
    c.slope_tol = "0.02";
    c.rel_tol = "0.05";
    c.z_max = "3";
    c.csv_out = "out.csv";
    c.manifest_out = "run.json";

    const RunConfig back = config_from_json(config_to_json(c));
    CHECK(back.command == c.command);
    CHECK(back.mesh == c.mesh);
    CHECK(back.n == c.n);
    CHECK(back.seed == c.seed);
    CHECK(back.workers == c.workers);
    CHECK(back.eps == c.eps);
    CHECK(back.points == c.points);
    CHECK(back.bulk == c.bulk);
    CHECK(back.boundary == c.boundary);
    CHECK(back.domain == c.domain);
    CHECK(back.z == c.z);
    CHECK(back.box_factor == c.box_factor);
    CHECK(back.scale == c.scale);
    CHECK(back.patch == c.patch);
    CHECK(back.event == c.event);
    CHECK(back.bootstrap == c.bootstrap);
    CHECK(back.slope_target == c.slope_target);
    CHECK(back.slope_tol == c.slope_tol);
    CHECK(back.rel_tol == c.rel_tol);
    CHECK(back.z_max == c.z_max);
    CHECK(back.csv_out == c.csv_out);
    CHECK(back.manifest_out == c.manifest_out);

    CHECK(back.seed_value() == 0xDEADBEEFull);
    CHECK(back.mesh_value() == doctest::Approx(1.0 / 512.0).epsilon(1e-15));
}

TEST_CASE("point parsing accepts fractions per component") {
    const auto z = parse_point("1/2,-0.25");
    CHECK(z.real() == 0.5);
    CHECK(z.imag() == -0.25);
    CHECK_THROWS_AS(parse_point("0.5"), std::invalid_argument);
}
