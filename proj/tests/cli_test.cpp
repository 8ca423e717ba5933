#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "p2ps/cli/cli.hpp"
#include "p2ps/cli/run_config.hpp"
#include "p2ps/cli/toml.hpp"
#include "p2ps/errors.hpp"
#include "p2ps/imaging/png_io.hpp"

using namespace p2ps;
using namespace p2ps::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string sub(const std::string& s) const { return (path / s).string(); }
};

int run(const std::vector<std::string>& args) { return run_cli(args); }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

/// Small synthetic dataset most CLI tests train against.
std::string make_dataset(const TempDir& td, int count = 6, int size = 32) {
    std::string out = td.sub("data");
    REQUIRE(run({"synth", "--count", std::to_string(count), "--size", std::to_string(size),
                 "--seed", "5", "--out", out}) == 0);
    return out;
}

std::vector<std::string> tiny_train_args(const std::string& data, const std::string& out) {
    return {"train",
            "--images", data + "/images",
            "--masks", data + "/masks",
            "--image-size", "32",
            "--depth", "4",
            "--base-channels", "4",
            "--steps", "4",
            "--eval-interval", "2",
            "--checkpoint-interval", "0",
            "--seed", "9",
            "--out", out};
}

void set_flag_value(std::vector<std::string>& args, const std::string& flag,
                    const std::string& value) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == flag) {
            args[i + 1] = value;
            return;
        }
    }
    FAIL("flag not present: " << flag);
}

}  // namespace

// ------------------------------------------------------------------- toml

TEST_CASE("toml parses booleans integers floats and quoted strings") {
    TomlTable t = parse_toml(
        "# run settings\n"
        "steps = 120\n"
        "lr = 2e-4\n"
        "augment = true\n"
        "clahe = false\n"
        "name = \"desk # run\"  # trailing comment\n"
        "path = \"a\\\\b\\n\"\n");
    CHECK(std::get<long long>(t.at("steps")) == 120);
    CHECK(std::get<double>(t.at("lr")) == doctest::Approx(2e-4));
    CHECK(std::get<bool>(t.at("augment")) == true);
    CHECK(std::get<bool>(t.at("clahe")) == false);
    CHECK(std::get<std::string>(t.at("name")) == "desk # run");
    CHECK(std::get<std::string>(t.at("path")) == "a\\b\n");
}

TEST_CASE("toml rejects malformed input with line numbers") {
    CHECK_THROWS_AS(parse_toml("steps = 1\nsteps = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("steps 12\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = \"unterminated\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = \"bad\\q\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = bareword\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("x = inf\n"), ConfigError);
    CHECK_THROWS_AS(parse_toml("bad key = 1\n"), ConfigError);
    try {
        parse_toml("ok = 1\nbroken\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("toml round-trips through dump and parse") {
    TomlTable t;
    t["zeta"] = std::string("x \"quoted\"\tend");
    t["alpha"] = true;
    t["count"] = 42LL;
    t["ratio"] = 0.30000000000000004;
    t["whole"] = 2.0;  // must re-parse as a float, not an integer
    TomlTable back = parse_toml(dump_toml(t));
    CHECK(back.size() == t.size());
    CHECK(std::get<std::string>(back.at("zeta")) == std::get<std::string>(t.at("zeta")));
    CHECK(std::get<bool>(back.at("alpha")) == true);
    CHECK(std::get<long long>(back.at("count")) == 42);
    CHECK(std::get<double>(back.at("ratio")) == 0.30000000000000004);
    CHECK(std::get<double>(back.at("whole")) == 2.0);
}

// ------------------------------------------------------------- run config

TEST_CASE("run config presets set coherent scales") {
    RunConfig full;
    full.apply_preset("full");
    CHECK(full.model.image_size == 256);
    CHECK(full.model.depth == 8);
    CHECK(full.model.base_channels == 64);
    CHECK(full.steps == 20000);

    RunConfig desk;
    desk.apply_preset("desk");
    CHECK(desk.model.image_size == 64);
    CHECK(desk.model.depth == 6);
    CHECK(desk.model.base_channels == 16);
    CHECK(desk.steps == 2000);
    CHECK(desk.eval_interval == 100);
    CHECK(desk.checkpoint_interval == 500);

    RunConfig bad;
    CHECK_THROWS_AS(bad.apply_preset("huge"), ConfigError);
}

TEST_CASE("run config rejects unknown keys and wrong types") {
    RunConfig rc;
    TomlTable t;
    t["not_a_key"] = 1LL;
    CHECK_THROWS_AS(rc.apply_table(t), ConfigError);

    TomlTable wrong;
    wrong["steps"] = std::string("many");
    CHECK_THROWS_AS(rc.apply_table(wrong), ConfigError);

    TomlTable ok;
    ok["steps"] = 7LL;
    ok["lr"] = 0.001;            // float key
    ok["train_fraction"] = 1LL;  // integer accepted where a float is wanted
    TomlTable bad_frac = ok;
    bad_frac["train_fraction"] = std::string("0.8");
    CHECK_THROWS_AS(rc.apply_table(bad_frac), ConfigError);
    rc.apply_table(ok);
    CHECK(rc.steps == 7);
    CHECK(rc.model.lr == doctest::Approx(0.001f));
    CHECK(rc.train_fraction == 1.0);  // validation rejects it later, parsing is typed
}

TEST_CASE("run config round-trips through its table form") {
    RunConfig rc;
    rc.apply_preset("desk");
    rc.model.seed = 77;
    rc.clahe = true;
    RunConfig back;
    back.apply_table(rc.to_table());
    CHECK(back.model.image_size == rc.model.image_size);
    CHECK(back.model.seed == rc.model.seed);
    CHECK(back.clahe == rc.clahe);
    CHECK(back.steps == rc.steps);
    CHECK(dump_toml(back.to_table()) == dump_toml(rc.to_table()));
}

// ------------------------------------------------------------------ synth

TEST_CASE("cli synth writes the dataset and is reproducible") {
    TempDir td("p2ps_cli_synth");
    std::string a = td.sub("a");
    std::string b = td.sub("b");
    REQUIRE(run({"synth", "--count", "5", "--size", "32", "--seed", "3", "--out", a}) == 0);
    REQUIRE(run({"synth", "--count", "5", "--size", "32", "--seed", "3", "--out", b}) == 0);

    int n_images = 0;
    for (const auto& e : fs::directory_iterator(fs::path(a) / "images")) {
        ++n_images;
        fs::path other = fs::path(b) / "images" / e.path().filename();
        CHECK(slurp(e.path().string()) == slurp(other.string()));
    }
    CHECK(n_images == 5);
    CHECK(fs::exists(fs::path(a) / "masks" / "0004.png"));
    CHECK(fs::exists(fs::path(a) / "manifest.json"));
    auto manifest = nlohmann::json::parse(slurp((fs::path(a) / "manifest.json").string()));
    CHECK(manifest["samples"].size() == 5);
}

TEST_CASE("cli synth validates before writing anything") {
    TempDir td("p2ps_cli_synth_bad");
    std::string out = td.sub("never");
    CHECK(run({"synth", "--count", "0", "--out", out}) == 2);
    CHECK_FALSE(fs::exists(out));
}

// ------------------------------------------------------------------ train

TEST_CASE("cli train produces config history checkpoint and meta") {
    TempDir td("p2ps_cli_train");
    std::string data = make_dataset(td);
    std::string out = td.sub("run");
    REQUIRE(run(tiny_train_args(data, out)) == 0);

    CHECK(fs::exists(fs::path(out) / "run_meta.json"));
    CHECK(fs::exists(fs::path(out) / "checkpoints" / "step_000004.p2ps"));

    auto hist = lines_of(out + "/history.csv");
    REQUIRE(hist.size() == 5);  // header + one row per step
    CHECK(hist[0] == "step,g_total,g_adv,g_l1,d_loss,train_acc,val_acc");
    CHECK(hist[1].substr(0, 2) == "1,");
    // interval 2: rows for steps 1 and 3 end with two empty accuracy cells
    CHECK(hist[1].ends_with(",,"));
    CHECK(hist[2].back() != ',');

    TomlTable resolved = load_toml(out + "/config.resolved.toml");
    CHECK(std::get<long long>(resolved.at("image_size")) == 32);
    CHECK(std::get<long long>(resolved.at("steps")) == 4);
    CHECK(std::get<long long>(resolved.at("seed")) == 9);

    auto meta = nlohmann::json::parse(slurp(out + "/run_meta.json"));
    CHECK(meta["command"] == "train");
    CHECK(meta["argv"].is_array());
    CHECK(meta.contains("timestamp"));
}

TEST_CASE("cli train with zero steps writes the initial state") {
    TempDir td("p2ps_cli_train0");
    std::string data = make_dataset(td);
    std::string out = td.sub("run");
    auto args = tiny_train_args(data, out);
    set_flag_value(args, "--steps", "0");
    REQUIRE(run(args) == 0);
    CHECK(fs::exists(fs::path(out) / "checkpoints" / "step_000000.p2ps"));
    auto hist = lines_of(out + "/history.csv");
    CHECK(hist.size() == 1);  // header only
}

TEST_CASE("cli train is reproducible run to run") {
    TempDir td("p2ps_cli_train_repro");
    std::string data = make_dataset(td);
    std::string r1 = td.sub("r1");
    std::string r2 = td.sub("r2");
    REQUIRE(run(tiny_train_args(data, r1)) == 0);
    REQUIRE(run(tiny_train_args(data, r2)) == 0);
    CHECK(slurp(r1 + "/history.csv") == slurp(r2 + "/history.csv"));
    CHECK(slurp(r1 + "/checkpoints/step_000004.p2ps") ==
          slurp(r2 + "/checkpoints/step_000004.p2ps"));
}

TEST_CASE("cli train pause and resume matches an uninterrupted run") {
    TempDir td("p2ps_cli_resume");
    std::string data = make_dataset(td);
    std::string straight = td.sub("straight");
    std::string part1 = td.sub("part1");
    std::string part2 = td.sub("part2");

    auto args8 = tiny_train_args(data, straight);
    set_flag_value(args8, "--steps", "8");
    REQUIRE(run(args8) == 0);

    REQUIRE(run(tiny_train_args(data, part1)) == 0);  // 4 steps
    auto resume = tiny_train_args(data, part2);
    set_flag_value(resume, "--steps", "8");  // total, not additional
    resume.push_back("--resume");
    resume.push_back(part1 + "/checkpoints/step_000004.p2ps");
    REQUIRE(run(resume) == 0);

    CHECK(slurp(straight + "/checkpoints/step_000008.p2ps") ==
          slurp(part2 + "/checkpoints/step_000008.p2ps"));

    auto full_hist = lines_of(straight + "/history.csv");
    auto tail_hist = lines_of(part2 + "/history.csv");
    REQUIRE(full_hist.size() == 9);
    REQUIRE(tail_hist.size() == 5);
    for (int k = 1; k <= 4; ++k) CHECK(tail_hist[k] == full_hist[k + 4]);
}

TEST_CASE("cli train refuses to resume a mismatched architecture") {
    TempDir td("p2ps_cli_resume_mismatch");
    std::string data = make_dataset(td);
    std::string small = td.sub("small");
    REQUIRE(run(tiny_train_args(data, small)) == 0);

    auto bigger = tiny_train_args(data, td.sub("bigger"));
    set_flag_value(bigger, "--depth", "5");  // differs from the checkpoint
    bigger.push_back("--resume");
    bigger.push_back(small + "/checkpoints/step_000004.p2ps");
    CHECK(run(bigger) == 2);
}

TEST_CASE("cli train flags override config file which overrides preset") {
    TempDir td("p2ps_cli_layers");
    std::string data = make_dataset(td);
    std::string cfg_path = td.sub("cfg.toml");
    {
        std::ofstream cfg(cfg_path);
        cfg << "image_size = 16\ndepth = 4\nbase_channels = 4\nsteps = 2\n"
            << "eval_interval = 0\ncheckpoint_interval = 0\n";
    }
    std::string out = td.sub("run");
    REQUIRE(run({"train", "--preset", "desk", "--config", cfg_path, "--image-size", "32",
                 "--images", data + "/images", "--masks", data + "/masks", "--seed", "9",
                 "--out", out}) == 0);
    TomlTable resolved = load_toml(out + "/config.resolved.toml");
    CHECK(std::get<long long>(resolved.at("image_size")) == 32);  // flag wins
    CHECK(std::get<long long>(resolved.at("steps")) == 2);        // file beats preset
    CHECK(std::get<long long>(resolved.at("depth")) == 4);
    CHECK(std::get<long long>(resolved.at("batch_size")) == 1);  // untouched default
}

TEST_CASE("cli train reports divergence with exit code 4") {
    TempDir td("p2ps_cli_diverge");
    std::string data = make_dataset(td);
    std::string out = td.sub("run");
    auto args = tiny_train_args(data, out);
    args.push_back("--lr");
    args.push_back("1e30");
    CHECK(run(args) == 4);
    CHECK(fs::exists(fs::path(out) / "history.csv"));  // partial curves survive
}

// ------------------------------------------------------------------- eval

TEST_CASE("cli eval writes a parsable report over the held-out split") {
    TempDir td("p2ps_cli_eval");
    std::string data = make_dataset(td);
    std::string run_dir = td.sub("run");
    REQUIRE(run(tiny_train_args(data, run_dir)) == 0);
    std::string ckpt = run_dir + "/checkpoints/step_000004.p2ps";

    std::string out = td.sub("eval");
    REQUIRE(run({"eval", "--checkpoint", ckpt, "--images", data + "/images", "--masks",
                 data + "/masks", "--split", "test", "--seed", "9", "--tag", "synthetic",
                 "--triptychs", "--out", out}) == 0);

    auto report = nlohmann::json::parse(slurp(out + "/report.json"));
    CHECK(report["aggregation"] == "micro");
    CHECK(report["dataset"] == "synthetic");
    CHECK(report["n_images"] == 2);  // 6 pairs, 80/20 split
    CHECK(report["macro"]["aggregation"] == "macro");
    for (const char* key : {"accuracy", "precision", "recall", "f1", "dice"}) {
        double v = report[key].get<double>();
        CHECK(v >= 0.0);
        CHECK(v <= 100.0);
        CHECK(report["macro"].contains(key));
    }
    CHECK(report["f1"] == report["dice"]);
    CHECK(report["per_image"].size() == 2);

    auto per_image = lines_of(out + "/per_image.csv");
    CHECK(per_image.size() == 3);
    CHECK(per_image[0] == "id,accuracy,precision,recall,f1,dice");

    int n_triptychs = 0;
    for (const auto& e : fs::directory_iterator(fs::path(out) / "triptychs")) {
        (void)e;
        ++n_triptychs;
    }
    CHECK(n_triptychs == 2);

    // Cross-dataset protocol: draw a second dataset with shifted ellipse
    // geometry and evaluate the same checkpoint against all of it.
    std::string shifted = td.sub("shifted");
    REQUIRE(run({"synth", "--count", "4", "--size", "32", "--min-axis", "0.08", "--max-axis",
                 "0.11", "--min-elong", "1.0", "--max-elong", "1.3", "--seed", "13", "--out",
                 shifted}) == 0);
    std::string xout = td.sub("xeval");
    REQUIRE(run({"eval", "--checkpoint", ckpt, "--images", shifted + "/images", "--masks",
                 shifted + "/masks", "--split", "all", "--tag", "shifted", "--out", xout}) == 0);
    auto xreport = nlohmann::json::parse(slurp(xout + "/report.json"));
    CHECK(xreport["dataset"] == "shifted");
    CHECK(xreport["n_images"] == 4);
}

TEST_CASE("cli eval takes the architecture from the checkpoint") {
    TempDir td("p2ps_cli_eval_arch");
    std::string data = make_dataset(td);
    std::string run_dir = td.sub("run");
    REQUIRE(run(tiny_train_args(data, run_dir)) == 0);
    // No architecture flags at all: image size 32 and depth 4 come from the file.
    REQUIRE(run({"eval", "--checkpoint", run_dir + "/checkpoints/step_000004.p2ps",
                 "--images", data + "/images", "--masks", data + "/masks", "--out",
                 td.sub("eval")}) == 0);
    TomlTable resolved = load_toml(td.sub("eval") + "/config.resolved.toml");
    CHECK(std::get<long long>(resolved.at("image_size")) == 32);
    CHECK(std::get<long long>(resolved.at("depth")) == 4);
}

// ---------------------------------------------------------------- predict

TEST_CASE("cli predict writes a reproducible binary mask") {
    TempDir td("p2ps_cli_predict");
    std::string data = make_dataset(td);
    std::string run_dir = td.sub("run");
    REQUIRE(run(tiny_train_args(data, run_dir)) == 0);
    std::string ckpt = run_dir + "/checkpoints/step_000004.p2ps";
    std::string image = data + "/images/0000.png";

    std::string m1 = td.sub("mask1.png");
    std::string m2 = td.sub("mask2.png");
    std::string raw = td.sub("raw.png");
    REQUIRE(run({"predict", "--checkpoint", ckpt, "--image", image, "--out", m1, "--raw",
                 raw}) == 0);
    REQUIRE(run({"predict", "--checkpoint", ckpt, "--image", image, "--out", m2}) == 0);

    imaging::Image2D mask = imaging::load_png(m1);
    CHECK(mask.width == 32);
    CHECK(mask.height == 32);
    CHECK(mask.is_binary());
    CHECK(slurp(m1) == slurp(m2));
    CHECK(fs::exists(raw));

    CHECK(run({"predict", "--checkpoint", ckpt, "--image", data + "/images/absent.png",
               "--out", td.sub("x.png")}) == 3);
    CHECK(run({"predict", "--checkpoint", td.sub("no.p2ps"), "--image", image, "--out",
               td.sub("y.png")}) == 3);
}

// ---------------------------------------------------------------- inspect

TEST_CASE("cli inspect writes histograms and augmentation previews") {
    TempDir td("p2ps_cli_inspect");
    std::string data = make_dataset(td);
    std::string out = td.sub("insp");
    REQUIRE(run({"inspect", "--image", data + "/images/0001.png", "--mask",
                 data + "/masks/0001.png", "--previews", "3", "--seed", "4", "--out", out}) ==
            0);

    long long total = 0;
    auto img_hist = lines_of(out + "/0001_histogram.csv");
    REQUIRE(img_hist.size() == 257);
    for (std::size_t i = 1; i < img_hist.size(); ++i) {
        total += std::stoll(img_hist[i].substr(img_hist[i].find(',') + 1));
    }
    CHECK(total == 32 * 32);

    auto mask_hist = lines_of(out + "/0001_mask_histogram.csv");
    for (std::size_t i = 1; i < mask_hist.size(); ++i) {
        long long bin = std::stoll(mask_hist[i].substr(0, mask_hist[i].find(',')));
        long long count = std::stoll(mask_hist[i].substr(mask_hist[i].find(',') + 1));
        if (count > 0) CHECK((bin == 0 || bin == 255));
    }
    for (int k = 0; k < 3; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "preview_%02d.png", k);
        CHECK(fs::exists(fs::path(out) / name));
        std::snprintf(name, sizeof(name), "preview_%02d_mask.png", k);
        CHECK(fs::exists(fs::path(out) / name));
    }
}

TEST_CASE("cli inspect previews collapse to the input under identity augmentation") {
    TempDir td("p2ps_cli_inspect_id");
    std::string data = make_dataset(td);
    std::string out = td.sub("insp");
    REQUIRE(run({"inspect", "--image", data + "/images/0002.png", "--previews", "2",
                 "--rotation", "0", "--width-shift", "0", "--height-shift", "0", "--shear",
                 "0", "--zoom-low", "1", "--zoom-high", "1", "--no-hflip", "--no-vflip",
                 "--out", out}) == 0);
    std::string original = slurp(data + "/images/0002.png");
    CHECK(slurp(out + "/preview_00.png") == original);
    CHECK(slurp(out + "/preview_01.png") == original);
}

// -------------------------------------------------------------- exit codes

TEST_CASE("cli maps failures to documented exit codes") {
    TempDir td("p2ps_cli_codes");
    CHECK(run({"--help"}) == 0);
    CHECK(run({"synth", "--help"}) == 0);
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"synth"}) == 2);                       // missing required --out
    CHECK(run({"synth", "--badflag", "1", "--out", td.sub("x")}) == 2);
    CHECK(run({"synth", "--max-axis", "0.5", "--out", td.sub("y")}) == 2);  // beyond 0.18 cap
    CHECK(run({"train", "--out", td.sub("r")}) == 2);  // no data directories
    CHECK(run({"train", "--images", td.sub("missing_images"), "--masks",
               td.sub("missing_masks"), "--image-size", "32", "--depth", "4",
               "--base-channels", "4", "--steps", "1", "--out", td.sub("r2")}) == 3);
    CHECK(run({"train", "--augment", "--no-augment", "--images", td.sub("a"), "--masks",
               td.sub("b"), "--out", td.sub("r3")}) == 2);
    CHECK(run({"eval", "--checkpoint", td.sub("nope.p2ps"), "--images", td.sub("a"),
               "--masks", td.sub("b"), "--out", td.sub("e")}) == 3);
}
