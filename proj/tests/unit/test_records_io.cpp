#include <doctest.h>

#include <sstream>

#include "pathid/records_io.hpp"
#include "chains.hpp"

using namespace pathid;
using namespace pathid::io;

TEST_CASE("complex and matrix JSON") {
  CHECK(complex_json(Complex(1.5, -2)).dump() == "[1.5,-2.0]");
  CHECK(complex_from_json(json::parse("[0.25, 3]")) == Complex(0.25, 3));
  CHECK_THROWS_AS(complex_from_json(json::parse("[1]")), FormatError);
  CHECK_THROWS_AS(complex_from_json(json::parse("\"x\"")), FormatError);

  Matrix m(2, 3);
  m << Complex(1, 2), 3, Complex(0, -1), 4, 5, Complex(0.1, 0.2);
  const json j = matrix_json(m);
  CHECK(j["rows"] == 2);
  CHECK(j["cols"] == 3);
  // row-major
  CHECK(j["data"][1].dump() == "[3.0,0.0]");
  CHECK(j["data"][3].dump() == "[4.0,0.0]");
  CHECK(matrix_from_json(j) == m);
  CHECK_THROWS_AS(matrix_from_json(json::parse(R"({"rows": 2, "cols": 2, "data": []})")), FormatError);
  CHECK_THROWS_AS(matrix_from_json(json::parse(R"({"rows": 1})")), FormatError);
}

TEST_CASE("ket JSON") {
  const ModeKet k = ModeKet::superposition(-2, 2, 0.5);
  CHECK(mode_ket_from_json(mode_ket_json(k)) == k);
  CHECK(mode_ket_json(ModeKet::basis(3)).dump() == "[[3,[1.0,0.0]]]");
  CHECK_THROWS_AS(mode_ket_from_json(json::parse("[[1.5, [1, 0]]]")), FormatError);
  const auto b = build_state(fixtures::bell_chain(0.0));
  const json bj = biphoton_json(b);
  CHECK(bj["truncation"] == 4);
  CHECK(bj["terms"].size() == 2);
  CHECK(bj["terms"][0][0] == 0);
}

TEST_CASE("counts CSV round trip") {
  const auto design = TomographyDesign::standard({-2, 0, 2});
  auto rec = simulate_counts(ket_to_density(build_state(fixtures::three_crystal(1, 1, 1, 0.3, 0.9))), design, 1e3,
                             1.0, 12);
  rec[4].integration_time = 2.5;
  std::stringstream ss;
  write_counts_csv(ss, rec);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "setting_id,signal_ket,idler_ket,counts,integration_time");
  ss.seekg(0);
  const auto back = read_counts_csv(ss);
  REQUIRE(back.size() == rec.size());
  for (std::size_t k = 0; k < rec.size(); ++k) {
    CHECK(back[k].setting == rec[k].setting);
    CHECK(back[k].counts == rec[k].counts);
    CHECK(back[k].integration_time == rec[k].integration_time);
  }
}

TEST_CASE("counts CSV errors name the line") {
  auto expect_line = [](const std::string& text, const std::string& where) {
    std::istringstream in(text);
    try {
      read_counts_csv(in);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  };
  const std::string h = "setting_id,signal_ket,idler_ket,counts,integration_time\n";
  const std::string good = "0,\"[[0,[1.0,0.0]]]\",\"[[0,[1.0,0.0]]]\",5,1.0\n";
  expect_line("", "empty");
  expect_line("id,counts\n", "line 1");
  expect_line(h + good + "1,\"[[0,[1.0,0.0]]]\",5,1.0\n", "line 3");
  expect_line(h + good + good + "2,\"[[0,[1.0,0.0]]]\",\"[[0,[1.0,0.0]]]\",-5,1.0\n", "line 4");
  expect_line(h + "0,\"[[0,[2.0,0.0]]]\",\"[[0,[1.0,0.0]]]\",5,1.0\n", "line 2");
  expect_line(h + "0,\"[[0,[1.0,0.0]]\",\"[[0,[1.0,0.0]]]\",5,1.0\n", "line 2");
  expect_line(h + "0,\"[[0,[1.0,0.0]]],\"[[0,[1.0,0.0]]]\",5,1.0\n", "line 2");
  expect_line(h + "0,\"[[0,[1.0,0.0]]]\",\"[[0,[1.0,0.0]]]\",5,0\n", "line 2");
  std::istringstream ok(h + good + "\n");
  CHECK(read_counts_csv(ok).size() == 1);
}

TEST_CASE("reconstruction JSON") {
  const auto design = TomographyDesign::standard({0, 2});
  const auto rec = expected_counts(ket_to_density(build_state(fixtures::bell_chain(0.0))), design, 1e6, 1.0);
  const auto r = mle_reconstruct(rec, design);
  const json j = reconstruction_json(r);
  CHECK(j["basis"].size() == 4);
  CHECK(j["iterations"] == r.iterations);
  CHECK(j["converged"] == r.converged);
  CHECK(matrix_from_json(j["rho"]) == r.subspace_rho);
}
