#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "lsf/harness.hpp"
#include "lsf/io.hpp"
#include "lsf/targets.hpp"

using namespace lsf;
namespace fs = std::filesystem;

TEST_CASE("sha256 and base64 against published vectors") {
  // FIPS 180-2 and RFC 4648 test vectors.
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const char* plain[] = {"", "f", "fo", "foo", "foob", "fooba", "foobar"};
  const char* coded[] = {"", "Zg==", "Zm8=", "Zm9v", "Zm9vYg==", "Zm9vYmE=", "Zm9vYmFy"};
  for (int i = 0; i < 7; ++i) {
    CHECK(base64_encode(plain[i]) == coded[i]);
    CHECK(base64_decode(coded[i]) == plain[i]);
  }
}

TEST_CASE("packed arrays round-trip bit for bit") {
  Mat m(2, 3);
  m << 1.0, -0.0, std::numeric_limits<double>::denorm_min(), 1e308, -3.141592653589793, 1.0 / 3.0;
  const Json j = pack_matrix(m);
  CHECK(j.at("rows") == 2);
  CHECK(j.at("cols") == 3);
  CHECK(j.at("dtype") == "f64le");
  const Mat back = unpack_matrix(Json::parse(j.dump()));
  REQUIRE(back.rows() == 2);
  for (int i = 0; i < 6; ++i) CHECK(std::signbit(back.data()[i]) == std::signbit(m.data()[i]));
  CHECK(back == m);
  // Row-major layout: the second double is m(0, 1).
  const std::string raw = base64_decode(j.at("data").get<std::string>());
  double second;
  std::memcpy(&second, raw.data() + 8, 8);
  CHECK(std::signbit(second));

  Vec v = Vec::LinSpaced(5, -1.0, 1.0);
  CHECK(unpack_vector(pack_vector(v)) == v);

  Json bad = j;
  bad["rows"] = 3;
  CHECK_THROWS_AS(unpack_matrix(bad), ConfigError);
}

TEST_CASE("run config is strict") {
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"crystal":{"n_ions":4,"bogus":1}})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"unknown":1})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"crystal":{"n_ions":"four"}})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"gate_time":{"seconds":1e-4,"t_min_multiple":2}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"seed":-1})")), ConfigError);

  const RunConfig rc = parse_run_config(Json::parse(
      R"({"crystal":{"n_ions":5,"lamb_dicke":0.07},"seed":9,"output_dir":"x","pool":{"ansatz":"multi","count":7}})"));
  CHECK(rc.crystal.n_ions == 5);
  CHECK(rc.seed == 9);
  CHECK(rc.pool.first_seed == 9);
  CHECK(rc.pool.count == 7);
  CHECK(rc.ansatz == Ansatz::multi);
  const IonCrystal c = make_crystal(rc);
  CHECK((c.lamb_dicke.array() == 0.07).all());

  // output_dir does not enter the provenance hash; everything else does.
  Json other = rc.raw;
  other["output_dir"] = "elsewhere";
  CHECK(parse_run_config(other).hash() == rc.hash());
  other["seed"] = 10;
  CHECK(parse_run_config(other).hash() != rc.hash());
}

TEST_CASE("multi pipeline desk guard") {
  RunConfig rc = parse_run_config(Json::parse(R"({"crystal":{"n_ions":21}})"));
  CHECK_THROWS_AS(check_multi_guard(rc, 21), ConfigError);
  CHECK_NOTHROW(check_multi_guard(rc, 20));
  rc.allow_large = true;
  CHECK_NOTHROW(check_multi_guard(rc, 21));
}

TEST_CASE("kernel cache") {
  const fs::path dir = fs::temp_directory_path() / "lsf_test_kernel_cache";
  fs::remove_all(dir);
  const IonCrystal c = fixture::chain(4);
  const double t = 2.0 * min_gate_time(c);
  const ToneGrid grid = restrict_tones_near_modes(build_tone_grid(c, t, default_margin(t)), c, default_window(t));
  const KernelBasis fresh = cached_kernel(dir, c, grid, kDefaultKernelTolerance);
  CHECK(fresh.basis == kernel_basis(build_closure_matrix(c, grid)).basis);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    const KernelBasis read = read_kernel(e.path());
    CHECK(read.basis == fresh.basis);
    CHECK(read.l_matrix == fresh.l_matrix);
    CHECK(read.tolerance == fresh.tolerance);
  }
  CHECK(files == 1);
  const KernelBasis again = cached_kernel(dir, c, grid, kDefaultKernelTolerance);
  CHECK(again.basis == fresh.basis);

  const fs::path junk = dir / "junk.bin";
  { std::ofstream(junk) << "not a kernel"; }
  CHECK_THROWS(read_kernel(junk));
  fs::remove_all(dir);
}

TEST_CASE("pool and solution files round-trip") {
  const RunConfig rc = parse_run_config(Json::parse(R"({"crystal":{"n_ions":4},"gate_time":{"t_min_multiple":3}})"));
  const Setup s = make_setup(rc, 4);
  const SolutionPool pool = make_pool(rc, s.set, Ansatz::global, 3, 1);
  const Json pj = Json::parse(pool_to_json(pool).dump());
  const SolutionPool back = pool_from_json(pj);
  REQUIRE(back.entries.size() == pool.entries.size());
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    CHECK(back.entries[i].coords == pool.entries[i].coords);
    CHECK(back.entries[i].seed == pool.entries[i].seed);
    CHECK(back.entries[i].residual == pool.entries[i].residual);
  }
  CHECK(back.crystal_hash == crystal_hash(s.crystal));
  CHECK_NOTHROW(check_provenance("pool", back.crystal_hash, back.grid_hash, s.crystal, *s.set.grid));
  const Setup five = make_setup(rc, 5);
  CHECK_THROWS_AS(check_provenance("pool", back.crystal_hash, back.grid_hash, five.crystal, *five.set.grid),
                  ConfigError);

  Json tampered = pj;
  tampered["coords_sha256"] = std::string(64, '0');
  CHECK_THROWS_AS(pool_from_json(tampered), ConfigError);

  SolutionFile f;
  f.crystal_hash = pool.crystal_hash;
  f.grid_hash = pool.grid_hash;
  f.config_hash = rc.hash();
  f.gate_time = s.gate_time;
  f.target = parse_target_spec("cluster:2x2", 4);
  f.solutions = solve(pool, s.set, f.target, rc.solver, true);
  const SolutionFile g = solutions_from_json(Json::parse(solutions_to_json(f).dump()));
  CHECK(g.gate_time == f.gate_time);
  CHECK(g.target.phases == f.target.phases);
  REQUIRE(g.solutions.size() == f.solutions.size());
  for (std::size_t i = 0; i < f.solutions.size(); ++i) {
    CHECK(g.solutions[i].coords == f.solutions[i].coords);
    CHECK(g.solutions[i].amplitudes == f.solutions[i].amplitudes);
    CHECK(g.solutions[i].infidelity == f.solutions[i].infidelity);
    CHECK(g.solutions[i].rabi_trace == f.solutions[i].rabi_trace);
  }
}

TEST_CASE("csv numbers are exact and reproducible") {
  CHECK(std::stod(fmt(0.1)) == 0.1);
  CHECK(std::stod(fmt(1.0 / 3.0)) == 1.0 / 3.0);
  CsvWriter w({"a", "b"});
  w.comment("hello");
  w.row({fmt(1), fmt(2.5)});
  CHECK(w.str() == "# hello\na,b\n1,2.5\n");
  CHECK_THROWS(w.row({"1"}));
}
