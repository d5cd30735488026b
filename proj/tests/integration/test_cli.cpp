#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / "msvq_cli_test";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    static CmdResult run(const std::string& args, const std::string& env = "") {
        const auto out = dir_ / "stdout.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + MSVQ_CLI_PATH + "' " + args + " > '" +
                                out.string() + "' 2>&1";
        const int status = std::system(cmd.c_str());
        std::ifstream in(out);
        std::stringstream ss;
        ss << in.rdbuf();
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
    }

    static std::vector<char> bytes(const std::string& name) {
        std::ifstream in(dir_ / name, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    static std::vector<float> floats(const std::string& name) {
        const auto b = bytes(name);
        std::vector<float> v((b.size() - 16) / 4);
        std::memcpy(v.data(), b.data() + 16, v.size() * 4);
        return v;
    }

    static inline fs::path dir_;
};

} // namespace

TEST_F(Cli, GenIsDeterministic) {
    ASSERT_EQ(run("gen --dist gauss-iid --rows 4096 --dim 64 --seed 7 --out a.fmat").code, 0);
    ASSERT_EQ(run("gen --dist gauss-iid --rows 4096 --dim 64 --seed 7 --out b.fmat").code, 0);
    EXPECT_EQ(bytes("a.fmat"), bytes("b.fmat"));
    EXPECT_EQ(bytes("a.fmat").size(), 16u + 4096u * 64u * 4u);
    ASSERT_EQ(run("gen --dist gmm --components 4 --rows 100 --dim 8 --seed 1 --out g.fmat").code, 0);
}

TEST_F(Cli, FullPipelineAtFullBudget) {
    ASSERT_EQ(run("gen --dist gauss-corr --rho 0.9 --rows 3000 --dim 32 --seed 3 --out d.fmat").code, 0);
    const auto tr = run("train --data d.fmat --sub-dim 4 --t-max 3 --alloc type1 --seed 5 --out m.msvq");
    ASSERT_EQ(tr.code, 0) << tr.out;
    const auto report = nlohmann::json::parse(tr.out);
    const double final_distortion = report["stages"].back()["distortion"].get<double>();

    const auto tb = run("table --model m.msvq --data d.fmat --out t.json");
    ASSERT_EQ(tb.code, 0) << tb.out;
    EXPECT_TRUE(nlohmann::json::parse(tb.out)["all_monotone"].get<bool>());

    // Type I on N = 8: four rows (8,7,6) and four rows (6,5,4).
    const unsigned total = 4 * 21 + 4 * 15;
    ASSERT_EQ(run("encode --model m.msvq --table t.json --data d.fmat --b-cap " + std::to_string(total) + " --out p.msvp").code, 0);
    ASSERT_EQ(run("decode --model m.msvq --table t.json --payload p.msvp --out r.fmat").code, 0);
    const auto z = floats("d.fmat");
    const auto zh = floats("r.fmat");
    ASSERT_EQ(z.size(), zh.size());
    double err = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) err += (double(z[k]) - zh[k]) * (double(z[k]) - zh[k]);
    err /= 3000.0;
    EXPECT_NEAR(err, final_distortion, 1e-6 * final_distortion);
    EXPECT_EQ(bytes("p.msvp").size(), 28u + 3000u * (total / 8));

    const auto info = run("info p.msvp --model m.msvq");
    ASSERT_EQ(info.code, 0);
    EXPECT_TRUE(nlohmann::json::parse(info.out)["model_matches"].get<bool>());
    EXPECT_EQ(nlohmann::json::parse(run("info m.msvq").out)["total_bits"].get<unsigned>(), total);

    const auto sw = run("sweep --model m.msvq --table t.json --data d.fmat --b-cap-grid 0:144:16 --out s.csv --plot s.svg");
    ASSERT_EQ(sw.code, 0) << sw.out;
    std::ifstream csv(dir_ / "s.csv");
    std::string line;
    std::getline(csv, line);
    double prev = 1e300;
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        const double mse = std::stod(cols[5]);
        EXPECT_LE(mse, prev + 1e-9);
        prev = mse;
        ++rows;
    }
    EXPECT_EQ(rows, 10);
    EXPECT_TRUE(fs::exists(dir_ / "s.svg"));

    const auto ve = run("verify --model m.msvq --table t.json --data d.fmat --rows 64");
    EXPECT_EQ(ve.code, 0) << ve.out;
    EXPECT_EQ(ve.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, EntropyCodedPipeline) {
    ASSERT_EQ(run("gen --dist gauss-corr --rows 2000 --dim 16 --seed 4 --out e.fmat").code, 0);
    ASSERT_EQ(run("train --data e.fmat --sub-dim 4 --t-max 2 --ec --lambda 2,4 --normalize-lambda --seed 1 --out em.msvq").code, 0);
    ASSERT_EQ(run("table --model em.msvq --data e.fmat --out et.json").code, 0);
    const auto enc = run("encode --model em.msvq --table et.json --data e.fmat --b-cap 30 --strict --out ep.msvp");
    ASSERT_EQ(enc.code, 0) << enc.out;
    ASSERT_EQ(run("decode --model em.msvq --table et.json --payload ep.msvp --out er.fmat").code, 0);
    EXPECT_EQ(bytes("er.fmat").size(), bytes("e.fmat").size());
}

TEST_F(Cli, ExitCodes) {
    ASSERT_EQ(run("gen --dist gauss-iid --rows 300 --dim 16 --seed 1 --out x.fmat").code, 0);
    EXPECT_EQ(run("train --data x.fmat --sub-dim 5 --out bad.msvq").code, 2);
    EXPECT_EQ(run("gen --dist nope --out y.fmat").code, 2);
    EXPECT_EQ(run("train --data missing.fmat --out y.msvq").code, 3);

    {
        std::ofstream f(dir_ / "nan.fmat", std::ios::binary);
        const char hdr[16] = {'F', 'M', 'A', 'T', 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0};
        f.write(hdr, 16);
        const float v[2] = {1.0f, std::numeric_limits<float>::quiet_NaN()};
        f.write(reinterpret_cast<const char*>(v), 8);
    }
    EXPECT_EQ(run("train --data nan.fmat --sub-dim 1 --t-max 1 --out n.msvq").code, 3);

    ASSERT_EQ(run("train --data x.fmat --sub-dim 4 --t-max 2 --alloc type3 --seed 1 --out x.msvq").code, 0);
    EXPECT_EQ(run("encode --model x.msvq --table none.json --data x.fmat --b-cap 8 --out z.msvp").code, 3);
    ASSERT_EQ(run("table --model x.msvq --data x.fmat --out x.json").code, 0);
    ASSERT_EQ(run("train --data x.fmat --sub-dim 4 --t-max 2 --alloc type3 --seed 2 --out y.msvq").code, 0);
    EXPECT_EQ(run("encode --model y.msvq --table x.json --data x.fmat --b-cap 8 --out z.msvp").code, 5);

    ASSERT_EQ(run("encode --model x.msvq --table x.json --data x.fmat --b-cap 20 --out z.msvp").code, 0);
    auto p = bytes("z.msvp");
    p.resize(p.size() - 1);
    std::ofstream(dir_ / "t.msvp", std::ios::binary).write(p.data(), static_cast<std::streamsize>(p.size()));
    EXPECT_EQ(run("decode --model x.msvq --table x.json --payload t.msvp --out q.fmat").code, 4);

    ASSERT_EQ(run("table --model y.msvq --data x.fmat --out y.json").code, 0);
    EXPECT_EQ(run("decode --model y.msvq --table y.json --payload z.msvp --out q.fmat").code, 5);
}

TEST_F(Cli, ImportedTableBinds) {
    ASSERT_EQ(run("gen --dist gauss-iid --rows 500 --dim 8 --seed 2 --out i.fmat").code, 0);
    ASSERT_EQ(run("train --data i.fmat --sub-dim 4 --t-max 1 --alloc type3 --seed 1 --out i.msvq").code, 0);
    {
        std::ofstream f(dir_ / "ext.json");
        f << R"({"format":"MLT1","n":2,"t_max":1,"mode":"exact","loss":[[9,1],[5,1]],"step_bits":[[6],[6]]})";
    }
    ASSERT_EQ(run("table --model i.msvq --import ext.json").code, 0);
    const auto enc = run("encode --model i.msvq --table ext.json --data i.fmat --b-cap 6 --out i.msvp");
    ASSERT_EQ(enc.code, 0) << enc.out;
    EXPECT_EQ(nlohmann::json::parse(enc.out)["plan"], nlohmann::json::parse("[1,0]"));
}

TEST_F(Cli, ThreadsFlagAndEnvGiveIdenticalModels) {
    ASSERT_EQ(run("gen --dist gauss-corr --rows 3000 --dim 16 --seed 9 --out th.fmat").code, 0);
    ASSERT_EQ(run("--threads 1 train --data th.fmat --sub-dim 4 --t-max 2 --seed 3 --out t1.msvq").code, 0);
    ASSERT_EQ(run("--threads 3 train --data th.fmat --sub-dim 4 --t-max 2 --seed 3 --out t3.msvq").code, 0);
    EXPECT_EQ(bytes("t1.msvq"), bytes("t3.msvq"));
    const auto r = run("train --data th.fmat --sub-dim 4 --t-max 2 --seed 3 --out t2.msvq", "MSVQ_THREADS=2");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(bytes("t1.msvq"), bytes("t2.msvq"));
}
