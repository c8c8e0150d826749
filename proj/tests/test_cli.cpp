#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

std::string bin() {
    if (const char* p = std::getenv("UDFMESH_BIN")) return p;
    // direct runs without ctest: look for the binary near the build tree
    for (const char* guess : {"tools/udfmesh", "build/tools/udfmesh", "../tools/udfmesh"})
        if (fs::exists(guess)) return fs::absolute(guess).string();
    REQUIRE_MESSAGE(false, "UDFMESH_BIN must point at the CLI binary");
    return "";
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string run_stdout(const std::string& args) {
    const fs::path tmp = fs::temp_directory_path() / "udfmesh_cli_stdout.txt";
    const std::string cmd = bin() + " " + args + " >" + tmp.string() + " 2>/dev/null";
    [[maybe_unused]] const int status = std::system(cmd.c_str());
    std::ifstream in(tmp);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / fs::path("udfmesh_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("cli: usage errors exit with code 2") {
    CHECK(run("") == 2);
    CHECK(run("train --out w.udfm") == 2);                       // neither corpus nor dataset
    CHECK(run("train --corpus /nonexistent --out w.udfm") == 2); // missing input file
    CHECK(run("definitely-not-a-subcommand") == 2);
}

TEST_CASE("cli: gen-corpus is byte-deterministic per seed") {
    TempDir tmp;
    const std::string a = tmp / "a.json", b = tmp / "b.json", c = tmp / "c.json";
    CHECK(run("gen-corpus --out " + a + " --count 6 --seed 11") == 0);
    CHECK(run("gen-corpus --out " + b + " --count 6 --seed 11") == 0);
    CHECK(run("gen-corpus --out " + c + " --count 6 --seed 12") == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    CHECK(fs::exists(tmp / "a.json.config.json")); // resolved config logged alongside

    const std::string empty = tmp / "empty.json";
    CHECK(run("gen-corpus --out " + empty + " --count 0 --seed 1") == 0);
    CHECK(slurp(empty).find("shapes") != std::string::npos);
}

TEST_CASE("cli: oracle meshing and self-evaluation") {
    TempDir tmp;
    const std::string shape = tmp / "shape.json";
    {
        std::ofstream out(shape);
        out << R"({"kind": "sphere", "radius": 0.4})";
    }
    const std::string obj = tmp / "sphere.obj";
    CHECK(run("mesh --shape " + shape + " --oracle --res 24 --out " + obj) == 0);
    CHECK(fs::exists(obj));

    const std::string csv = run_stdout("eval --pred " + obj + " --gt " + obj + " --samples 20000 --seed 3");
    CHECK(csv.find("shape,iteration,chamfer_e5,f1,precision,recall,samples,seed") != std::string::npos);
    // self-evaluation: chamfer 0 (up to roundoff), F1 exactly 1
    REQUIRE(csv.find("sphere,,") != std::string::npos);
    double cd = -1, f1 = -1, prec = -1, rec = -1;
    REQUIRE(std::sscanf(csv.c_str() + csv.find("sphere,,") + 8, "%lf,%lf,%lf,%lf", &cd, &f1, &prec, &rec) == 4);
    CHECK(cd < 1e-12);
    CHECK(f1 == 1.0);
    CHECK(prec == 1.0);
    CHECK(rec == 1.0);

    // identical flags produce byte-identical meshes
    const std::string obj2 = tmp / "sphere2.obj";
    CHECK(run("mesh --shape " + shape + " --oracle --res 24 --out " + obj2) == 0);
    CHECK(slurp(obj) == slurp(obj2));

    // malformed OBJ input is a runtime error, exit code 1
    const std::string bad = tmp / "bad.obj";
    {
        std::ofstream out(bad);
        out << "f 0 1 2\n";
    }
    CHECK(run("eval --pred " + bad + " --gt " + obj) == 1);
}

TEST_CASE("cli: dataset/train/mesh round trip at toy scale") {
    TempDir tmp;
    const std::string corpus = tmp / "corpus.json";
    CHECK(run("gen-corpus --out " + corpus + " --count 2 --seed 5") == 0);

    const std::string ds = tmp / "train.udfd";
    CHECK(run("dataset --corpus " + corpus + " --out " + ds + " --res 16 --threads 2") == 0);
    CHECK(fs::exists(ds));

    const std::string weights = tmp / "toy.udfm";
    CHECK(run("train --dataset " + ds + " --epochs 1 --out " + weights + " --seed 1 --threads 2") == 0);
    CHECK(fs::exists(weights));
    CHECK(fs::exists(tmp / "toy.log.csv"));
    {
        std::ifstream log(tmp / "toy.log.csv");
        std::string header;
        std::getline(log, header);
        CHECK(header == "epoch,shape,iters,loss");
    }

    const std::string shape = tmp / "shape.json";
    {
        std::ofstream out(shape);
        out << R"({"kind": "sphere", "radius": 0.3})";
    }
    const std::string obj = tmp / "pred.obj";
    CHECK(run("mesh --weights " + weights + " --shape " + shape + " --res 16 --iters 2 --snapshots --out " +
              obj + " --threads 2") == 0);
    CHECK(fs::exists(obj));
    CHECK(fs::exists(tmp / "pred_iter1.obj"));
    CHECK(fs::exists(tmp / "pred_iter2.obj"));
}
