#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "nsbi/core/rng.hpp"
#include "nsbi/diffcore/layers.hpp"
#include "nsbi/io/blob.hpp"
#include "nsbi/io/chain.hpp"
#include "nsbi/io/csv.hpp"

using namespace nsbi;

TEST_SUITE("io") {
  TEST_CASE("table round trip is lossless") {
    Rng rng(1);
    Table t;
    t.header = {"a", "b", "c"};
    t.values.resize(50, 3);
    for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values.data()[i] = standard_normal(rng) * std::pow(10.0, i % 40 - 20);
    t.values(0, 0) = std::numeric_limits<double>::denorm_min();
    t.values(1, 1) = -0.0;
    const Table back = parse_table(format_table(t));
    CHECK(back.header == t.header);
    CHECK(back.values == t.values);
  }

  TEST_CASE("table files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "nsbi_io_test";
    std::filesystem::create_directories(dir);
    Table t{{"x"}, Mat::Constant(3, 1, 0.1)};
    write_table((dir / "t.csv").string(), t);
    CHECK(read_table((dir / "t.csv").string()).values == t.values);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("parse errors name the line") {
    CHECK_THROWS_WITH_AS((void)parse_table("a,b\n1,2\n3\n", "obs.csv"), doctest::Contains("obs.csv:3"), std::runtime_error);
    CHECK_THROWS_WITH_AS((void)parse_table("a,b\n1,2\n3,zz\n", "obs.csv"), doctest::Contains("'zz'"), std::runtime_error);
    CHECK_THROWS_AS((void)read_table("/nonexistent/file.csv"), std::runtime_error);
  }

  TEST_CASE("sha256 of known strings") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("theta header") {
    CHECK(theta_header(2) == std::vector<std::string>{"theta_0", "theta_1"});
    CHECK(theta_header(1, {"mu"}) == std::vector<std::string>{"mu"});
  }

  TEST_CASE("chain table columns") {
    ChainRecord rec;
    rec.thetas = Mat::Ones(2, 2);
    rec.log_target = Vec::Constant(2, -1.0);
    rec.accepted = {1, 0};
    const Table t = chain_table(rec, {"p", "q"});
    CHECK(t.header == std::vector<std::string>{"iteration", "p", "q", "log_estimate", "accepted"});
    CHECK(t.values(0, 0) == 1.0);
    CHECK(t.values(1, 0) == 2.0);
    CHECK(t.values(1, 4) == 0.0);
  }

  TEST_CASE("blob round trip is bit exact") {
    Rng rng(2);
    diff::ParamStore store;
    diff::Linear layer(store, "layer", 3, 4, rng);
    Blob blob;
    blob.kind = "test";
    blob.config = {{"answer", 42}, {"name", "x"}};
    append_params(blob, store);
    const std::string bytes = encode_blob(blob);
    const Blob back = decode_blob(bytes);
    CHECK(back.kind == "test");
    CHECK(back.config == blob.config);
    CHECK(encode_blob(back) == bytes);
    diff::ParamStore other;
    Rng rng2(3);
    diff::Linear copy(other, "layer", 3, 4, rng2);
    load_params(back, other);
    CHECK(other.get("layer.weight").value().storage() == store.get("layer.weight").value().storage());
  }

  TEST_CASE("corrupt blobs are rejected") {
    Blob blob;
    blob.kind = "test";
    blob.arrays.emplace_back("a", diff::Tensor::vector({1.0, 2.0}));
    const std::string bytes = encode_blob(blob);
    CHECK_THROWS((void)decode_blob(bytes.substr(0, bytes.size() - 3)));
    CHECK_THROWS((void)decode_blob("not a blob"));
    CHECK_THROWS((void)blob.array("missing"));
  }
}
