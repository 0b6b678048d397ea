#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "qmem/cli.hpp"
#include "qmem/errors.hpp"
#include "qmem/io.hpp"
#include "qmem/profile.hpp"

namespace fs = std::filesystem;
using namespace qmem;
using doctest::Approx;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::initializer_list<std::string> args) {
    std::vector<std::string> storage{"qmem"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) argv.push_back(s.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(fs::temp_directory_path() / ("qmem_cli_" + name)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string str(const std::string& leaf = {}) const {
        return leaf.empty() ? path_.string() : (path_ / leaf).string();
    }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double printed(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string k, v;
    while (in >> k >> v)
        if (k == key) return io::parse_double(v);
    FAIL("missing key " << key);
    return NAN;
}

// Normalized trickle followed by a spike that outruns the zero-reflection coupling.
void write_steep_profile(const fs::path& path) {
    std::vector<TableSample> s;
    for (int k = 0; k <= 1200; ++k) {
        const double t = 0.05 * k;
        const double spike = 0.6 * std::exp(-0.5 * std::pow((t - 20.0) / 0.4, 2));
        s.push_back({t, 0.01 * std::exp(-0.01 * t) + spike});
    }
    const double total = total_excitation(InputProfile::tabulated(s), INFINITY);
    io::CsvWriter w({"tau", "r_in"});
    for (const auto& x : s) w.add_row({x.tau, x.rate / total});
    io::write_file_atomic(path, w.str());
}

}  // namespace

TEST_CASE("grid specifications") {
    const auto lg = cli::parse_grid("log:1e-5:1e-2:4");
    REQUIRE(lg.size() == 4);
    CHECK(lg[1] == Approx(1e-4));
    CHECK(cli::parse_grid("lin:0.1:0.5:5")[2] == Approx(0.3));
    CHECK(cli::parse_grid("list:0.1,0.2").size() == 2);
    CHECK(cli::parse_grid("0.3,0.4,0.5").size() == 3);
    CHECK_THROWS_AS(cli::parse_grid("log:1e-5:1e-2"), DomainError);
    CHECK_THROWS_AS(cli::parse_grid("lin:1:0:3"), DomainError);
    CHECK_THROWS_AS(cli::parse_grid("0.1,x"), DomainError);
    CHECK_THROWS_AS(cli::parse_grid("lin:0:1:2.5"), DomainError);
}

TEST_CASE("schedule writes a report and a CSV") {
    TempDir dir("schedule");
    const auto r = run({"schedule", "--profile", "exp:r=0.036", "--kappa-i", "1e-4", "--out",
                        dir.str()});
    REQUIRE(r.code == cli::kOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["fidelity"].get<double>() == Approx(0.97).epsilon(5e-3));
    CHECK(nlohmann::json::parse(slurp(dir.path() / "report.json")) == j);
    CHECK(slurp(dir.path() / "schedule.csv").starts_with("tau,kappa,r_in,beta1_sq,beta_sq,r_out\n"));

    const auto lossless = run({"schedule", "--profile", "exp:r=0.036", "--kappa-i", "0", "--out",
                               dir.str()});
    REQUIRE(lossless.code == cli::kOk);
    CHECK(nlohmann::json::parse(lossless.out)["tau_max"] == "inf");
}

TEST_CASE("input errors exit 1 and write nothing") {
    TempDir dir("bad");
    const auto out = dir.str("sub");
    for (auto args : {std::vector<std::string>{"schedule", "--profile", "exp:r=", "--out", out},
                      {"schedule", "--profile", "bogus", "--out", out},
                      {"schedule", "--profile", "exp:r=0.1", "--kappa-i", "1.5", "--out", out},
                      {"schedule", "--profile", "gauss:r=0.1533,n=3.5", "--out", out},
                      {"simulate", "--profile", "exp:r=0.1", "--tol", "1e-3", "--out", out},
                      {"sweep", "--grid-r", "lin:1:0:3", "--out", out},
                      {"sweep", "--family", "sech", "--out", out},
                      {"verify", "nonsense"}}) {
        std::vector<const char*> argv{"qmem"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream o, e;
        CHECK(cli::run(static_cast<int>(argv.size()), argv.data(), o, e) == cli::kInputError);
        CHECK_FALSE(e.str().empty());
    }
    CHECK_FALSE(fs::exists(out));
    CHECK(run({}).code == cli::kInputError);
}

TEST_CASE("infeasible schedule exits 2 under --strict") {
    TempDir dir("strict");
    const auto csv = dir.path() / "steep.csv";
    write_steep_profile(csv);
    const std::string literal = "table:" + csv.string();
    const auto strict = run({"schedule", "--profile", literal, "--kappa-i", "1e-4", "--strict",
                             "--out", dir.str("a")});
    CHECK(strict.code == cli::kInfeasible);
    const auto relaxed = run({"schedule", "--profile", literal, "--kappa-i", "1e-4", "--out",
                              dir.str("b")});
    CHECK(relaxed.code == cli::kOk);
    CHECK(relaxed.err.find("note:") != std::string::npos);
}

TEST_CASE("simulate reports zero stage-2 reflection and converges with tol") {
    TempDir dir("simulate");
    const auto a = run({"simulate", "--profile", "exp:r=0.036", "--kappa-i", "1e-4", "--tol",
                        "1e-8", "--out", dir.str("a")});
    const auto b = run({"simulate", "--profile", "exp:r=0.036", "--kappa-i", "1e-4", "--tol",
                        "1e-11", "--out", dir.str("b")});
    REQUIRE(a.code == cli::kOk);
    REQUIRE(b.code == cli::kOk);
    CHECK(printed(a.out, "max_stage2_r_out") <= 1e-7);
    CHECK(printed(b.out, "energy_balance_residual") < printed(a.out, "energy_balance_residual"));
    CHECK(slurp(dir.path() / "a" / "trajectory.csv")
              .starts_with("tau,kappa,r_in,beta1_sq,beta_sq,r_out,cum_reflection,cum_intrinsic\n"));
}

TEST_CASE("constant zero coupling reflects the whole pulse") {
    TempDir dir("const0");
    const auto r = run({"simulate", "--profile", "exp:r=0.1", "--kappa", "const:0", "--tau-end",
                        "300", "--out", dir.str()});
    REQUIRE(r.code == cli::kOk);
    CHECK(printed(r.out, "final_cum_reflection") == Approx(1.0).epsilon(1e-9));
    CHECK(printed(r.out, "final_beta_sq") == 0.0);
}

TEST_CASE("schedule CSV replayed through simulate reproduces the inline run") {
    TempDir dir("roundtrip");
    for (const char* profile : {"exp:r=0.036", "gauss:r=0.1533"}) {
        REQUIRE(run({"schedule", "--profile", profile, "--kappa-i", "1e-4", "--samples", "4001",
                     "--tau-end", "200", "--out", dir.str("s")})
                    .code == cli::kOk);
        REQUIRE(run({"simulate", "--profile", profile, "--kappa-i", "1e-4", "--tau-end", "200",
                     "--out", dir.str("inline")})
                    .code == cli::kOk);
        REQUIRE(run({"simulate", "--profile", profile, "--kappa-i", "1e-4", "--tau-end", "200",
                     "--kappa", "file:" + dir.str("s/schedule.csv"), "--out", dir.str("file")})
                    .code == cli::kOk);
        const auto x = io::read_csv(dir.path() / "inline" / "trajectory.csv");
        const auto y = io::read_csv(dir.path() / "file" / "trajectory.csv");
        REQUIRE(x.rows.size() == y.rows.size());
        const auto bx = x.column("beta_sq"), by = y.column("beta_sq");
        const auto ox = x.column("r_out"), oy = y.column("r_out");
        double worst = 0.0;
        for (std::size_t k = 0; k < bx.size(); ++k) {
            worst = std::max(worst, std::abs(bx[k] - by[k]));
            worst = std::max(worst, std::abs(ox[k] - oy[k]));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("sweep output is deterministic and contains the reference cells") {
    TempDir dir("sweep");
    const auto a = run({"sweep", "--family", "exp", "--threads", "1", "--out", dir.str("a")});
    const auto b = run({"sweep", "--family", "exp", "--out", dir.str("b")});
    REQUIRE(a.code == cli::kOk);
    REQUIRE(b.code == cli::kOk);
    const auto text = slurp(dir.path() / "a" / "surface.csv");
    CHECK(text == slurp(dir.path() / "b" / "surface.csv"));

    auto find_cell = [](const io::CsvTable& t, double ki, double r) {
        for (const auto& row : t.rows)
            if (std::abs(row[0] - ki) < 1e-12 && row[1] == r) return row[2];
        return -1.0;
    };
    const auto exp_table = io::read_csv(dir.path() / "a" / "surface.csv");
    CHECK(find_cell(exp_table, 1e-4, 0.036) == Approx(0.97).epsilon(5e-3));

    REQUIRE(run({"sweep", "--family", "gauss", "--out", dir.str("g")}).code == cli::kOk);
    const auto g_table = io::read_csv(dir.path() / "g" / "surface.csv");
    CHECK(find_cell(g_table, 1e-4, 0.1533) == Approx(0.9987).epsilon(8e-4));
}

TEST_CASE("verify passes on the operating points and catches a corrupted coupling") {
    const auto ok = run({"verify", "all"});
    REQUIRE(ok.code == cli::kOk);
    const auto j = nlohmann::json::parse(ok.out);
    CHECK(j["passed"] == true);
    CHECK(j["checks"].size() == 8);

    const auto a = run({"verify", "appendix-a", "--profile", "gauss:r=0.1533", "--kappa-i", "1e-4"});
    CHECK(a.code == cli::kOk);
    const auto s = run({"verify", "semiclassical", "--profile", "exp:r=0.036"});
    CHECK(s.code == cli::kOk);

    CHECK(run({"verify", "appendix-a", "--fault-kappa-scale", "1.01"}).code == cli::kVerifyFailed);
    CHECK(run({"verify", "semiclassical", "--fault-kappa-scale", "1.01"}).code ==
          cli::kVerifyFailed);

    TempDir dir("verify");
    CHECK(run({"verify", "semiclassical", "--out", dir.str()}).code == cli::kOk);
    CHECK(fs::exists(dir.path() / "verify.json"));
}
