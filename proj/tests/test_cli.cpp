#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using njson = nlohmann::json;

std::string cli_bin() {
  const char* p = std::getenv("EXS_CLI_BIN");
  REQUIRE(p != nullptr);
  return p;
}

fs::path tmp_root() {
  const char* p = std::getenv("EXS_TEST_TMP");
  REQUIRE(p != nullptr);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path path = tmp_root() / name;
  std::ofstream out(path);
  out << text;
  return path;
}

int run_cli(const std::string& subcommand, const fs::path& config, const fs::path& out_dir,
            const std::string& extra = "") {
  fs::create_directories(out_dir);
  const std::string cmd = cli_bin() + " " + subcommand + " --config " + config.string() +
                          " --out " + out_dir.string() + " " + extra + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

njson load_json(const fs::path& p) { return njson::parse(slurp(p)); }

const char* kUnduloidJob = R"({
  "surface": {"kind": "unduloid", "alpha": 0.8, "gamma": 2.4},
  "domain": {"auto_zeros": [0, 1]},
  "bc": "neumann",
  "conformal_weight": "gauss",
  "mesh_n": 256,
  "spectrum": {"count": 6, "target": 1.0}
})";

}  // namespace

TEST_CASE("unduloid-info reports derived parameters and curvature zeros") {
  const auto cfg = write_config("info.json", R"({
    "surface": {"kind": "unduloid", "alpha": 0.8, "gamma": 2.4},
    "info": {"window": [-5.0, 10.0]},
    "export": {"samples": 33}
  })");
  const auto out = tmp_root() / "info_out";
  CHECK(run_cli("unduloid-info", cfg, out) == 0);
  const auto rep = load_json(out / "unduloid_info.json");
  CHECK(rep.at("command") == "unduloid-info");
  CHECK(rep.at("results").at("mu").get<double>() == doctest::Approx(0.625));
  const auto zeros = rep.at("results").at("curvature_zeros");
  REQUIRE(zeros.size() == 4);
  CHECK(zeros[0].get<double>() == doctest::Approx(-4.18879).epsilon(1e-5));
  CHECK(zeros[1].get<double>() == doctest::Approx(-0.83776).epsilon(1e-5));
  CHECK(zeros[2].get<double>() == doctest::Approx(5.86431).epsilon(1e-5));
  CHECK(zeros[3].get<double>() == doctest::Approx(9.21534).epsilon(1e-5));

  const auto csv = slurp(out / "profile.csv");
  CHECK(csv.rfind("v,x,z,k1,k2,rho,n_rad,n_axial\n", 0) == 0);
  // header + samples
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 34);
}

TEST_CASE("unduloid-info: empty window and degenerate surface") {
  const auto cfg = write_config("info_empty.json", R"({
    "surface": {"kind": "unduloid", "alpha": 0.8, "gamma": 2.4},
    "info": {"window": [1.0, 1.0]}
  })");
  const auto out = tmp_root() / "info_empty_out";
  CHECK(run_cli("unduloid-info", cfg, out) == 0);
  CHECK(load_json(out / "unduloid_info.json").at("results").at("curvature_zeros").empty());

  const auto bad = write_config("info_bad.json", R"({
    "surface": {"kind": "unduloid", "alpha": 1.0, "gamma": 1.0}
  })");
  CHECK(run_cli("unduloid-info", bad, tmp_root() / "info_bad_out") == 2);
}

TEST_CASE("config schema: unknown keys and bad values exit 2") {
  const auto unknown = write_config("unknown.json", R"({"surfaces": {}})");
  CHECK(run_cli("spectrum", unknown, tmp_root() / "u1") == 2);
  const auto nested = write_config("unknown2.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0, "bogus": 1}
  })");
  CHECK(run_cli("spectrum", nested, tmp_root() / "u2") == 2);
  const auto zero_count = write_config("count0.json", R"({
    "surface": {"kind": "flat"}, "spectrum": {"count": 0}
  })");
  CHECK(run_cli("spectrum", zero_count, tmp_root() / "u3") == 2);
  const auto not_json = write_config("broken.json", "{not json");
  CHECK(run_cli("spectrum", not_json, tmp_root() / "u4") == 2);
  CHECK(run_cli("spectrum", tmp_root() / "missing.json", tmp_root() / "u5") == 2);
}

TEST_CASE("spectrum command: flat annulus values and cluster flagging") {
  const auto cfg = write_config("flat_spec.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "bc": "neumann",
    "mesh_n": 256,
    "spectrum": {"count": 6}
  })");
  const auto out = tmp_root() / "flat_spec_out";
  CHECK(run_cli("spectrum", cfg, out) == 0);
  const auto rep = load_json(out / "spectrum.json");
  const auto entries = rep.at("spectrum").at("entries");
  REQUIRE(entries.size() == 6);
  const double expected[6] = {0.0, 1.0, 1.0, 2.4674011, 3.4674011, 3.4674011};
  for (int i = 0; i < 6; ++i)
    CHECK(entries[i].at("value").get<double>() ==
          doctest::Approx(expected[i]).epsilon(2e-4));
  CHECK(rep.at("spectrum").at("volume").get<double>() == doctest::Approx(4 * 3.14159265).epsilon(1e-6));

  const auto und = write_config("und_spec.json", kUnduloidJob);
  const auto out2 = tmp_root() / "und_spec_out";
  CHECK(run_cli("spectrum", und, out2) == 0);
  const auto rep2 = load_json(out2 / "spectrum.json");
  CHECK(rep2.at("target_cluster").at("size").get<int>() == 3);
  CHECK(rep2.at("target_cluster").at("mean").get<double>() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("spectrum command: mode cap exceeded exits 3 with a warning") {
  const auto cfg = write_config("cap.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "mesh_n": 64,
    "spectrum": {"count": 12, "m_max": 1}
  })");
  const auto out = tmp_root() / "cap_out";
  CHECK(run_cli("spectrum", cfg, out) == 3);
  const auto rep = load_json(out / "spectrum.json");
  CHECK(rep.at("spectrum").at("complete").get<bool>() == false);
  CHECK(rep.contains("warning"));
}

TEST_CASE("verify-extremal: certified, refuted, inconclusive exit codes") {
  const auto flat_n = write_config("ve_flat_n.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "bc": "neumann",
    "mesh_n": 128,
    "certificate": {"k": 1}
  })");
  const auto out1 = tmp_root() / "ve1";
  CHECK(run_cli("verify-extremal", flat_n, out1) == 0);
  CHECK(load_json(out1 / "verify_extremal.json").at("results").at("status") == "certified");

  const auto flat_d = write_config("ve_flat_d.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "bc": "dirichlet",
    "mesh_n": 128,
    "certificate": {"k": 1}
  })");
  const auto out2 = tmp_root() / "ve2";
  CHECK(run_cli("verify-extremal", flat_d, out2) == 0);
  CHECK(load_json(out2 / "verify_extremal.json").at("results").at("status") == "refuted");

  const auto und = write_config("ve_und.json", R"({
    "surface": {"kind": "unduloid", "alpha": 0.8, "gamma": 2.4},
    "domain": {"auto_zeros": [0, 1]},
    "mesh_n": 256,
    "certificate": {"k": 1}
  })");
  const auto out3 = tmp_root() / "ve3";
  CHECK(run_cli("verify-extremal", und, out3) == 0);
  const auto rep3 = load_json(out3 / "verify_extremal.json");
  CHECK(rep3.at("results").at("status") == "certified");
  CHECK(rep3.at("results").at("k_reported").get<int>() == 1);
  CHECK(rep3.at("results").at("mu").get<double>() == doctest::Approx(1.0).epsilon(1e-3));
  for (const auto& scan : rep3.at("results").at("scans"))
    CHECK(scan.at("consistent_with_max").get<bool>());

  const auto stuck = write_config("ve_stuck.json", R"({
    "surface": {"kind": "unduloid", "alpha": 0.8, "gamma": 2.4},
    "domain": {"auto_zeros": [0, 1]},
    "mesh_n": 128,
    "certificate": {"k": 1, "max_iterations": 1}
  })");
  CHECK(run_cli("verify-extremal", stuck, tmp_root() / "ve4") == 4);
}

TEST_CASE("derivative-check command") {
  const auto cfg = write_config("dc.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "mesh_n": 128,
    "check": {"kind": "conformal", "k": 3, "psi": {"kind": "cos_mode", "j": 2}}
  })");
  const auto out = tmp_root() / "dc_out";
  CHECK(run_cli("derivative-check", cfg, out) == 0);
  const auto rep = load_json(out / "derivative_check.json");
  CHECK(rep.at("results").at("richardson_rel_err").get<double>() <= 1e-6);

  const auto tensor = write_config("dc_t.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "mesh_n": 128,
    "check": {"kind": "tensor", "k": 1, "h_uu": {"kind": "coordinate"}, "h_vv": {"kind": "zero"}}
  })");
  const auto out_t = tmp_root() / "dc_t_out";
  CHECK(run_cli("derivative-check", tensor, out_t) == 0);
  CHECK(load_json(out_t / "derivative_check.json").at("results").at("formula").get<double>() ==
        doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("certificate command: global mode refutes the flat annulus") {
  const auto cfg = write_config("cert_g.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "mesh_n": 128,
    "certificate": {"k": 1, "mode": "global"}
  })");
  const auto out = tmp_root() / "cert_g_out";
  CHECK(run_cli("certificate", cfg, out) == 0);
  const auto rep = load_json(out / "certificate.json");
  CHECK(rep.at("results").at("certificate").at("status") == "refuted");
  CHECK(rep.at("results").at("certificate").at("residual").get<double>() ==
        doctest::Approx(0.70710678).epsilon(1e-4));
}

TEST_CASE("exports") {
  const auto cfg = write_config("exp.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0},
    "mesh_n": 64,
    "export": {"samples": 17, "k": 1}
  })");
  const auto out = tmp_root() / "exp_out";
  CHECK(run_cli("export-profile", cfg, out) == 0);
  const auto csv = slurp(out / "profile.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 18);

  CHECK(run_cli("export-eigenfunction", cfg, out) == 0);
  const auto ecsv = slurp(out / "eigenfunction.csv");
  CHECK(ecsv.rfind("v,a\n", 0) == 0);
  CHECK(std::count(ecsv.begin(), ecsv.end(), '\n') == 66);
  CHECK(load_json(out / "export_eigenfunction.json").at("results").at("value").get<double>() ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  const auto cfg = write_config("det.json", kUnduloidJob);
  const auto o1 = tmp_root() / "det1";
  const auto o2 = tmp_root() / "det2";
  const auto o4 = tmp_root() / "det4";
  CHECK(run_cli("verify-extremal", cfg, o1, "--threads 1") == 0);
  CHECK(run_cli("verify-extremal", cfg, o2, "--threads 1") == 0);
  CHECK(run_cli("verify-extremal", cfg, o4, "--threads 4") == 0);
  const auto r1 = slurp(o1 / "verify_extremal.json");
  CHECK(r1 == slurp(o2 / "verify_extremal.json"));
  CHECK(r1 == slurp(o4 / "verify_extremal.json"));
  CHECK(r1.find("\"status\"") != std::string::npos);
}

TEST_CASE("config echo carries every resolved default") {
  const auto cfg = write_config("echo.json", R"({
    "surface": {"kind": "flat", "flat_length": 2.0}
  })");
  const auto out = tmp_root() / "echo_out";
  CHECK(run_cli("spectrum", cfg, out) == 0);
  const auto echo = load_json(out / "spectrum.json").at("config");
  CHECK(echo.at("bc") == "neumann");
  CHECK(echo.at("conformal_weight") == "gauss");
  CHECK(echo.at("mesh_n").get<int>() == 256);
  CHECK(echo.at("spectrum").at("count").get<int>() == 8);
  CHECK(echo.at("spectrum").at("m_max").get<int>() == 64);
  CHECK(echo.at("domain").at("v_a").get<double>() == 0.0);
  CHECK(echo.at("domain").at("v_b").get<double>() == 2.0);
  CHECK(echo.at("certificate").at("max_iterations").get<long long>() == 100000);
}
