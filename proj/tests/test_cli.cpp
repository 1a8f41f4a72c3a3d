#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "regiontag/audio_io.hpp"
#include "regiontag/cli.hpp"
#include "regiontag/dataset.hpp"

using namespace regiontag;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "regiontag");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

// small dataset shared by the train/eval/tag tests
const TempDir& dataset() {
    static TempDir d("regiontag_cli_data");
    static const bool made = [] {
        const auto r = cli({"simulate", "--out", d / "ds", "--train", "6", "--val", "2", "--test", "2", "--clip-length", "3",
                            "--events-mean", "60", "--seed", "3"});
        REQUIRE(r.code == 0);
        return true;
    }();
    (void)made;
    return d;
}

}  // namespace

TEST_CASE("simulate is reproducible") {
    TempDir d("regiontag_cli_sim");
    const std::vector<std::string> base{"simulate", "--train", "10", "--val", "2", "--test", "2", "--clip-length", "2", "--seed", "7"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", d / "a"});
    b.insert(b.end(), {"--out", d / "b", "--jobs", "1"});
    REQUIRE(cli(a).code == 0);
    REQUIRE(cli(b).code == 0);
    const auto ma = Manifest::load(d / "a/manifest.txt");
    CHECK(ma.train.size() == 10);
    CHECK(ma.val.size() == 2);
    CHECK(ma.test.size() == 2);
    CHECK(slurp(d / "a/manifest.txt") == slurp(d / "b/manifest.txt"));
    for (const auto& split : {"train", "val", "test"}) {
        for (const auto& entry : fs::directory_iterator(d.path / "a" / split)) {
            CHECK(slurp(entry.path()) == slurp(d.path / "b" / split / entry.path().filename()));
        }
    }
    CHECK(fs::exists(d / "a/run.json"));
    CHECK(slurp(d / "a/run.json").find("\"seed\": \"7\"") != std::string::npos);
}

TEST_CASE("simulate writes 60 s clips at 24 kHz") {
    TempDir d("regiontag_cli_long");
    REQUIRE(cli({"simulate", "--out", d / "x", "--train", "1", "--val", "0", "--test", "0"}).code == 0);
    CHECK(read_array_wav(d / "x/train/clip_0000.wav").length() == 1440000);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"simulate"}).code == 2);
    CHECK(cli({"simulate", "--out", "/tmp/x", "--classes", "20"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("config file with overrides") {
    TempDir d("regiontag_cli_cfg");
    std::ofstream(d / "exp.cfg") << "# experiment\n[simulate]\ntrain = 3\nval = 1\ntest = 1\nclip-length = 2\nseed = 5\n";
    REQUIRE(cli({"--config", d / "exp.cfg", "simulate", "--out", d / "s", "--train", "2"}).code == 0);
    const auto m = Manifest::load(d / "s/manifest.txt");
    CHECK(m.train.size() == 2);
    CHECK(m.val.size() == 1);
}

TEST_CASE("acs-expand and extract") {
    const auto& d = dataset();
    REQUIRE(cli({"acs-expand", "--manifest", d / "ds/manifest.txt", "--out", d / "acs"}).code == 0);
    const auto m = Manifest::load(d / "acs/manifest.txt");
    CHECK(m.train.size() == 48);
    CHECK(m.val.size() == 2);
    CHECK(m.train[3].wav.find("_acs3") != std::string::npos);

    REQUIRE(cli({"simulate", "--out", d / "sim_acs", "--train", "2", "--val", "1", "--test", "1", "--clip-length", "2",
                 "--acs"}).code == 0);
    const auto sa = Manifest::load(d / "sim_acs/manifest.txt");
    CHECK(sa.train.size() == 16);
    CHECK(sa.train[9].wav.find("clip_0001_acs1") != std::string::npos);
    CHECK(sa.test.size() == 1);

    const auto r = cli({"extract", "--wav", d / "ds/train/clip_0000.wav", "--features", "lps,ipd,fov", "--region", "-30:30",
                        "--out", d / "f.rtfd"});
    REQUIRE(r.code == 0);
    const auto planes = read_feature_dump(d / "f.rtfd");
    CHECK(planes.size() == 6);
    CHECK(cli({"extract", "--wav", d / "ds/train/clip_0000.wav", "--features", "df", "--out", d / "g.rtfd"}).code == 2);
    CHECK(cli({"extract", "--wav", d / "nope.wav", "--out", d / "g.rtfd"}).code == 3);
}

TEST_CASE("train, eval and tag") {
    const auto& d = dataset();
    const std::vector<std::string> train{"train", "--manifest", d / "ds/manifest.txt", "--features", "lps,ipd,df",
                                         "--query", "angular", "--epochs", "2", "--crop", "1", "--crops-per-clip", "2",
                                         "--lr", "1e-3", "--seed", "4"};
    auto a = train, b = train;
    a.insert(a.end(), {"--out", d / "m1"});
    b.insert(b.end(), {"--out", d / "m2", "--jobs", "1"});
    const auto ra = cli(a);
    REQUIRE(ra.code == 0);
    REQUIRE(cli(b).code == 0);
    const auto log = slurp(d / "m1/train_log.csv");
    CHECK(log.rfind("epoch,train_loss,val_mAP,val_EER\n", 0) == 0);
    CHECK(log == slurp(d / "m2/train_log.csv"));
    CHECK(fs::exists(d / "m1/model.rtck"));
    CHECK(slurp(d / "m1/run.json").find("lps,ipd,df") != std::string::npos);

    SUBCASE("feature and query mismatch is caught before training") {
        auto bad = train;
        bad[6] = "omni";
        bad.insert(bad.end(), {"--out", d / "bad"});
        CHECK(cli(bad).code == 2);
        CHECK_FALSE(fs::exists(d / "bad/train_log.csv"));
    }
    SUBCASE("eval") {
        const auto r = cli({"eval", "--checkpoint", d / "m1/model.rtck", "--manifest", d / "ds/manifest.txt", "--harness",
                            "query", "fixed", "location", "--out", d / "m1/results.csv", "--per-class", d / "m1/ap.csv"});
        REQUIRE(r.code == 0);
        const auto csv = slurp(d / "m1/results.csv");
        CHECK(csv.rfind("mode,features,mAP,EER,n_examples\n", 0) == 0);
        CHECK(csv.find("\nfixed,lps,ipd,df,") != std::string::npos);
        CHECK(csv.find("\nlocation,") != std::string::npos);
        CHECK(fs::exists(d / "m1/ap.csv"));
        CHECK(cli({"eval", "--checkpoint", d / "m1/model.rtck", "--manifest", d / "ds/manifest.txt", "--harness", "omni"}).code == 2);
    }
    SUBCASE("tag") {
        MultichannelClip silent = MultichannelClip::zeros(4, 24000, 24000.0);
        write_wav(d / "silent.wav", silent);
        const auto r1 = cli({"tag", "--wav", d / "silent.wav", "--checkpoint", d / "m1/model.rtck", "--region", "-30:30"});
        const auto r2 = cli({"tag", "--wav", d / "silent.wav", "--checkpoint", d / "m1/model.rtck", "--region", "330:390"});
        REQUIRE(r1.code == 0);
        CHECK(r1.out == r2.out);
        CHECK(r1.out.find("nan") == std::string::npos);
        int lines = 0;
        for (char c : r1.out) lines += c == ':';
        CHECK(lines == 13);
        const auto clip = d / "ds/test/clip_0000.wav";
        const auto r3 = cli({"tag", "--wav", clip, "--checkpoint", d / "m1/model.rtck", "--region", "-30:30"});
        const auto r4 = cli({"tag", "--wav", clip, "--checkpoint", d / "m1/model.rtck", "--region", "330:390"});
        CHECK(r3.out == r4.out);
        CHECK(cli({"tag", "--wav", clip, "--checkpoint", d / "m1/model.rtck"}).code == 2);
        CHECK(cli({"tag", "--wav", clip, "--checkpoint", d / "m1/model.rtck", "--region", "x"}).code == 2);
        auto two = silent;
        two.channels.resize(2);
        write_wav(d / "two.wav", two);
        CHECK(cli({"tag", "--wav", d / "two.wav", "--checkpoint", d / "m1/model.rtck", "--region", "0:60"}).code == 3);
        auto slow = silent;
        slow.sample_rate = 16000;
        write_wav(d / "slow.wav", slow);
        CHECK(cli({"tag", "--wav", d / "slow.wav", "--checkpoint", d / "m1/model.rtck", "--region", "0:60"}).code == 3);
    }
}

TEST_CASE("distance model through the cli") {
    const auto& d = dataset();
    TempDir t("regiontag_cli_dist");
    REQUIRE(cli({"simulate", "--out", t / "ds", "--train", "4", "--val", "2", "--test", "1", "--clip-length", "3",
                 "--events-mean", "60", "--distance-levels", "1", "2.5", "4", "--seed", "8"})
                .code == 0);
    REQUIRE(cli({"train", "--manifest", t / "ds/manifest.txt", "--features", "lps,ipd,distance", "--query", "distance",
                 "--epochs", "1", "--crop", "1", "--out", t / "m"})
                .code == 0);
    const auto r = cli({"tag", "--wav", t / "ds/test/clip_0000.wav", "--checkpoint", t / "m/model.rtck", "--distance", "2.5"});
    CHECK(r.code == 0);
    CHECK(cli({"eval", "--checkpoint", t / "m/model.rtck", "--manifest", t / "ds/manifest.txt"}).code == 0);
    (void)d;
}
