/* Copyright 2026 The kanprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "kanprompt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "kanprompt/errors.hpp"

namespace kanprompt {

namespace fs = std::filesystem;

namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream s;
  s << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s << (i ? ", " : "") << shape[i];
  s << "]";
  return s.str();
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

}  // namespace

Checkpoint capture_checkpoint(const SegmentationModel& model, const TrainConfig& config,
                              int epoch, std::vector<EpochRecord> history) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.config.model = model.config();
  ckpt.epoch = epoch;
  ckpt.history = std::move(history);
  for (const Parameter* p : model.parameters().all()) {
    ckpt.tensors.push_back({p->name, p->shape, p->value});
  }
  return ckpt;
}

void restore_parameters(SegmentationModel& model, const Checkpoint& ckpt) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  std::size_t used = 0;
  for (Parameter* p : model.parameters().all()) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw CheckpointError("checkpoint lacks tensor " + p->name);
    }
    const NamedTensor& t = *it->second;
    if (t.shape != p->shape || t.data.size() != p->size()) {
      throw CheckpointError("shape mismatch for tensor " + p->name + ": checkpoint " +
                            shape_string(t.shape) + " vs model " + shape_string(p->shape));
    }
    ++used;
  }
  if (used != ckpt.tensors.size()) {
    for (const auto& t : ckpt.tensors) {
      if (model.parameters().find(t.name) == nullptr) {
        throw CheckpointError("checkpoint tensor " + t.name + " has no counterpart in the model");
      }
    }
  }
  for (Parameter* p : model.parameters().all()) p->value = by_name.at(p->name)->data;
}

std::unique_ptr<SegmentationModel> model_from_checkpoint(const Checkpoint& ckpt) {
  auto model = std::make_unique<SegmentationModel>(ckpt.config.model);
  restore_parameters(*model, ckpt);
  return model;
}

void checkpoint_save(const Checkpoint& ckpt, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "kanprompt-checkpoint";
  manifest["version"] = ckpt.version;
  manifest["num_classes"] = ckpt.config.model.num_classes;
  manifest["dims"] = {{"decoder_dim", ckpt.config.model.decoder_dim},
                      {"encoder_dim", ckpt.config.model.encoder.embed_dim},
                      {"prompt_depth", ckpt.config.model.prompt_depth}};
  manifest["config"] = ckpt.config;
  manifest["epoch"] = ckpt.epoch;
  manifest["history"] = ckpt.history;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : ckpt.tensors) {
    const std::string file = t.name + ".bin";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + (dir / file).string());
    std::vector<unsigned char> bytes(t.data.size() * 4);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &t.data[i], 4);
      for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("cannot write " + (dir / file).string());
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"file", file}, {"dtype", "float32-le"}});
  }
  manifest["tensors"] = tensors;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
}

Checkpoint checkpoint_load(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw CheckpointError("missing checkpoint manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  Checkpoint ckpt;
  try {
    if (manifest.value("format", std::string()) != "kanprompt-checkpoint") {
      throw CheckpointError(manifest_path.string() + " is not a kanprompt checkpoint");
    }
    ckpt.version = manifest.at("version").get<int>();
    if (ckpt.version != kCheckpointVersion) {
      throw CheckpointError("checkpoint version " + std::to_string(ckpt.version) +
                            " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    manifest.at("config").get_to(ckpt.config);
    ckpt.epoch = manifest.at("epoch").get<int>();
    manifest.at("history").get_to(ckpt.history);
    for (const auto& entry : manifest.at("tensors")) {
      NamedTensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      const fs::path file = dir / entry.at("file").get<std::string>();
      const std::size_t expected = element_count(t.shape) * 4;
      std::ifstream blob(file, std::ios::binary);
      if (!blob) throw CheckpointError("checkpoint tensor file missing: " + file.string());
      std::vector<unsigned char> bytes(expected);
      blob.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
      const auto got = static_cast<std::size_t>(blob.gcount());
      if (got != expected || blob.peek() != std::char_traits<char>::eof()) {
        throw CheckpointError("corrupt checkpoint: tensor " + t.name + " in " + file.string() +
                              " holds " + (got != expected ? std::to_string(got) : "more than " + std::to_string(expected)) +
                              " bytes, expected " + std::to_string(expected));
      }
      t.data.resize(element_count(t.shape));
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
        std::memcpy(&t.data[i], &bits, 4);
      }
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace kanprompt
