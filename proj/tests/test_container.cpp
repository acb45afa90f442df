#include <fstream>

#include "doctest.h"
#include "fidkit/container.hpp"
#include "fidkit/errors.hpp"
#include "fidkit/toy_model.hpp"
#include "test_support.hpp"

using namespace fidkit;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("well-formed container loads with the full required tensor count") {
  testsup::TempDir dir("container");
  const ModelConfig cfg = testsup::tiny_config();
  write_toy_model(cfg, 11, dir.file("m.fidw"), /*untied_head=*/false);

  const ModelWeights w = load_weights(dir.file("m.fidw"), cfg);
  CHECK(w.size() == required_tensors(cfg).size());
  CHECK(w.config().tied_lm_head);

  write_toy_model(cfg, 11, dir.file("u.fidw"), /*untied_head=*/true);
  const ModelWeights wu = load_weights(dir.file("u.fidw"), cfg);
  CHECK(wu.size() == required_tensors(cfg).size() + 1);
  CHECK_FALSE(wu.config().tied_lm_head);
}

TEST_CASE("missing tensor is reported by name") {
  testsup::TempDir dir("container_missing");
  const ModelConfig cfg = testsup::tiny_config();
  TensorMap tensors = make_toy_tensors(cfg, 3);
  tensors.erase("dec.0.cross_attn.k");
  save_container(dir.file("m.fidw"), tensors);

  try {
    load_weights(dir.file("m.fidw"), cfg);
    FAIL("expected a missing-tensor error");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::Data);
    CHECK(std::string(e.what()).find("dec.0.cross_attn.k") != std::string::npos);
  }
}

TEST_CASE("transposed shape is a shape-mismatch error naming the tensor") {
  testsup::TempDir dir("container_shape");
  const ModelConfig cfg = testsup::tiny_config();
  TensorMap tensors = make_toy_tensors(cfg, 3);
  Tensor& bad = tensors.at("enc.1.ffn.wi");
  std::swap(bad.shape[0], bad.shape[1]);
  save_container(dir.file("m.fidw"), tensors);

  try {
    load_weights(dir.file("m.fidw"), cfg);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("enc.1.ffn.wi") != std::string::npos);
    CHECK(msg.find("shape") != std::string::npos);
  }
}

TEST_CASE("truncated payload is detected and names the tensor") {
  testsup::TempDir dir("container_trunc");
  const ModelConfig cfg = testsup::tiny_config();
  write_toy_model(cfg, 5, dir.file("m.fidw"));

  std::string bytes = slurp(dir.file("m.fidw"));
  bytes.resize(bytes.size() - 64);
  std::ofstream(dir.file("cut.fidw"), std::ios::binary) << bytes;

  CHECK_THROWS_WITH_AS(load_container(dir.file("cut.fidw")),
                       doctest::Contains("truncated"), Error);
}

TEST_CASE("bad magic is rejected") {
  testsup::TempDir dir("container_magic");
  std::ofstream(dir.file("junk.fidw"), std::ios::binary)
      << "NOTAFILE________________________";
  CHECK_THROWS_WITH_AS(load_container(dir.file("junk.fidw")), doctest::Contains("magic"), Error);
}

TEST_CASE("container writer is deterministic and round-trips") {
  testsup::TempDir dir("container_rt");
  const ModelConfig cfg = testsup::tiny_config();
  const TensorMap tensors = make_toy_tensors(cfg, 9);
  save_container(dir.file("a.fidw"), tensors);
  save_container(dir.file("b.fidw"), tensors);
  CHECK(slurp(dir.file("a.fidw")) == slurp(dir.file("b.fidw")));

  const TensorMap loaded = load_container(dir.file("a.fidw"));
  REQUIRE(loaded.size() == tensors.size());
  for (const auto& [name, t] : tensors) {
    REQUIRE(loaded.count(name) == 1);
    CHECK(loaded.at(name).shape == t.shape);
    CHECK(loaded.at(name).data == t.data);
  }
}
