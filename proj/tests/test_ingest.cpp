#include "rfs/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <stdexcept>

#include "doctest.h"
#include "rfs/common.hpp"

using namespace rfs;
using namespace rfs::ingest;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path((std::filesystem::temp_directory_path() / name).string()) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_csv basic parsing with header and limit") {
    TempFile f("rfs_t1.csv", "a,b,label\n1,2,0\n3,4,1\n5,6,0\n");
    auto ds = load_csv(f.path, "label", 2);
    CHECK(ds.n() == 2);
    CHECK(ds.dim() == 2);
    CHECK(ds.X(0, 0) == 1.0);
    CHECK(ds.X(1, 1) == 4.0);
    CHECK(ds.y(1) == 1.0);
    CHECK(ds.feature_names[0] == "a");
}

TEST_CASE("load_csv maps class labels to +-1") {
    TempFile f("rfs_t2.csv", "x,label\n0.5,0\n0.6,1\n0.7,1\n");
    auto ds = load_csv(f.path, "label", 10, ClassMapping{0.0, 1.0});
    CHECK(ds.classification);
    CHECK(ds.y(0) == -1.0);
    CHECK(ds.y(1) == 1.0);
    CHECK(ds.y(2) == 1.0);
}

TEST_CASE("load_csv selects the label column by index without a header") {
    TempFile f("rfs_t3.csv", "1.5,7\n2.5,8\n");
    auto ds = load_csv(f.path, "1", 10);
    CHECK(ds.n() == 2);
    CHECK(ds.y(0) == 7.0);
    CHECK(ds.X(0, 0) == 1.5);
}

TEST_CASE("load_csv reports malformed rows with their line numbers") {
    TempFile f("rfs_t4.csv", "x,label\n1.0,0\nNaN,1\n");
    try {
        load_csv(f.path, "label", 10);
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
    }
    TempFile g("rfs_t5.csv", "x,label\n1.0\n");
    CHECK_THROWS_AS(load_csv(g.path, "label", 10), std::runtime_error);
    CHECK_THROWS_AS(load_csv(f.path, "missing", 10), std::runtime_error);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", "label", 10), std::runtime_error);
    TempFile e("rfs_t5b.csv", "");
    CHECK_THROWS_AS(load_csv(e.path, "label", 10), std::runtime_error);
    TempFile h("rfs_t5c.csv", "x,label\n1,0\n");
    CHECK_THROWS_AS(load_csv(h.path, "label", 0), std::invalid_argument);  // limit >= 1
}

TEST_CASE("save then reload is the identity on X and y") {
    TempFile f("rfs_t6.csv", "u,v,label\n0.25,-1.5,3.25\n1e-3,2.5,-0.5\n7,8,9\n");
    auto ds = load_csv(f.path, "label", 100);
    TempFile out("rfs_t6b.csv", "");
    save_csv(ds, out.path);
    auto back = load_csv(out.path, "label", 100);
    CHECK((ds.X - back.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ds.y - back.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardize centers and scales, guards constant columns") {
    Dataset ds;
    ds.X.resize(2, 2);
    ds.X << 1.0, 5.0, 3.0, 5.0;
    ds.y.resize(2);
    ds.y << 0.0, 1.0;
    auto [std_ds, t] = standardize(ds);
    CHECK(std_ds.X(0, 0) == doctest::Approx(-1.0));
    CHECK(std_ds.X(1, 0) == doctest::Approx(1.0));
    CHECK(t.mean(0) == doctest::Approx(2.0));
    CHECK(t.std(0) == doctest::Approx(1.0));
    // constant column: all zeros, std recorded as 0
    CHECK(std_ds.X(0, 1) == 0.0);
    CHECK(std_ds.X(1, 1) == 0.0);
    CHECK(t.std(1) == 0.0);
}

TEST_CASE("stored transform reproduces the standardized training set") {
    auto blob = make_blobs(64, 3, 2.0, 11);
    auto [std_ds, t] = standardize(blob);
    auto again = apply_transform(blob, t);
    CHECK((std_ds.X - again.X).cwiseAbs().maxCoeff() == 0.0);
    // standardizing already standardized data barely moves it
    auto [twice, t2] = standardize(std_ds);
    CHECK((twice.X - std_ds.X).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("split produces a seeded partition") {
    auto blob = make_blobs(100, 2, 1.0, 3);
    auto [train, test] = split(blob, 0.8, 42);
    CHECK(train.n() == 80);
    CHECK(test.n() == 20);

    auto [train2, test2] = split(blob, 0.8, 42);
    CHECK((train.X - train2.X).cwiseAbs().maxCoeff() == 0.0);

    // partition: every original row appears exactly once across both sides
    auto key = [](double a, double b) { return a * 1e6 + b; };
    std::vector<double> seen;
    for (Eigen::Index i = 0; i < train.n(); ++i) seen.push_back(key(train.X(i, 0), train.X(i, 1)));
    for (Eigen::Index i = 0; i < test.n(); ++i) seen.push_back(key(test.X(i, 0), test.X(i, 1)));
    std::sort(seen.begin(), seen.end());
    std::vector<double> orig;
    for (Eigen::Index i = 0; i < blob.n(); ++i) orig.push_back(key(blob.X(i, 0), blob.X(i, 1)));
    std::sort(orig.begin(), orig.end());
    CHECK(seen == orig);
}

TEST_CASE("split is a partition across random fractions and seeds") {
    auto rng = rfs::make_rng(5);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::uniform_int_distribution<int> sizes(4, 60);
    for (int trial = 0; trial < 100; ++trial) {
        int n = sizes(rng);
        double frac = u(rng);
        Eigen::Index expect_train = static_cast<Eigen::Index>(std::floor(frac * n + 1e-9));
        if (expect_train < 1 || expect_train >= n) continue;
        auto blob = make_blobs(n, 1, 1.0, trial);
        auto [train, test] = split(blob, frac, trial);
        CHECK(train.n() + test.n() == n);
        CHECK(train.n() == expect_train);
    }
}

TEST_CASE("split rejects degenerate fractions") {
    auto blob = make_blobs(10, 1, 1.0, 1);
    CHECK_THROWS_AS(split(blob, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(blob, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(blob, 0.01, 1), std::invalid_argument);  // empty train side
}

TEST_CASE("blob generator labels both classes") {
    auto blob = make_blobs(200, 14, 3.0, 9);
    CHECK(blob.dim() == 14);
    CHECK(blob.classification);
    int pos = 0;
    for (Eigen::Index i = 0; i < blob.n(); ++i) {
        CHECK((blob.y(i) == 1.0 || blob.y(i) == -1.0));
        if (blob.y(i) > 0) ++pos;
    }
    CHECK(pos > 50);
    CHECK(pos < 150);
}

TEST_CASE("RFS_DATA_DIR is used as a fallback search root") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "rfs_data_dir_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "inner.csv");
        out << "x,label\n1,2\n";
    }
    setenv("RFS_DATA_DIR", dir.string().c_str(), 1);
    auto ds = load_csv("inner.csv", "label", 10);
    CHECK(ds.n() == 1);
    unsetenv("RFS_DATA_DIR");
    fs::remove_all(dir);
}
