// Copyright 2026 The crowdpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crowdpipe/sdk/submission.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe::sdk {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kFileMissing, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kStoreWriteError, "cannot write " + path.string());
  out << data;
}

Shape parse_dims(const std::string& text) {
  Shape s;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto x = text.find('x', pos);
    std::string part = text.substr(pos, x == std::string::npos ? std::string::npos : x - pos);
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || end != part.data() + part.size() || v <= 0) {
      throw Error(Errc::kInvalidTensor, "bad shape '" + text + "'");
    }
    s.push_back(v);
    if (x == std::string::npos) break;
    pos = x + 1;
  }
  return s;
}

std::string shape_text(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

StageFile read_stage_file(const fs::path& path) {
  Json j;
  try {
    j = parse_json(slurp(path));
  } catch (const Error& e) {
    if (e.code() == Errc::kFileMissing) throw;
    throw Error(Errc::kInvalidManifest, path.string() + ": " + e.what());
  }
  StageFile s;
  try {
    s.artefact_id = j.at("artefact_id").get<std::string>();
    s.input_shape = j.at("input_shape").get<Shape>();
    s.output_shape = j.at("output_shape").get<Shape>();
    s.memory_footprint_bytes = j.at("memory_footprint_bytes").get<std::uint64_t>();
    const auto blob = base64_decode(j.at("artefact").get<std::string>());
    s.artefact.assign(blob.begin(), blob.end());
    if (j.contains("sha256")) s.sha256 = j.at("sha256").get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(Errc::kInvalidManifest, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(Errc::kInvalidManifest, path.string() + ": " + e.what());
  }
  if (s.sha256 && *s.sha256 != sha256_hex(s.artefact)) {
    throw Error(Errc::kChecksumMismatch, path.string() + ": artefact does not match sha256");
  }
  return s;
}

void write_stage_file(const fs::path& path, const StageFile& s) {
  Json j{{"artefact", base64_encode(s.artefact)},
         {"artefact_id", s.artefact_id},
         {"input_shape", s.input_shape},
         {"memory_footprint_bytes", s.memory_footprint_bytes},
         {"output_shape", s.output_shape},
         {"sha256", s.sha256.value_or(sha256_hex(s.artefact))}};
  spit(path, canonical_dump(j) + "\n");
}

std::vector<Tensor> read_inputs_file(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string header;
  if (!std::getline(in, header)) throw Error(Errc::kInvalidTensor, "empty inputs file");
  std::istringstream hs(header);
  std::string tok;
  std::optional<DType> dtype;
  std::optional<Shape> shape;
  while (hs >> tok) {
    if (tok.rfind("dtype=", 0) == 0) {
      try {
        dtype = parse_dtype(tok.substr(6));
      } catch (const Error& e) {
        throw Error(Errc::kInvalidTensor, e.what());
      }
    } else if (tok.rfind("shape=", 0) == 0) {
      shape = parse_dims(tok.substr(6));
    } else {
      throw Error(Errc::kInvalidTensor, "unknown header field '" + tok + "'");
    }
  }
  if (!dtype || !shape) throw Error(Errc::kInvalidTensor, "header needs dtype= and shape=");
  const std::size_t count = element_count(*shape);

  std::vector<Tensor> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (*dtype == DType::kInt64) {
      std::vector<std::int64_t> v;
      std::int64_t x;
      while (ls >> x) v.push_back(x);
      if (!ls.eof() || v.size() != count) {
        throw Error(Errc::kInvalidTensor, "line " + std::to_string(lineno) + ": expected " +
                                              std::to_string(count) + " integers");
      }
      out.push_back(Tensor::from_ints(*shape, v));
    } else {
      std::vector<float> v;
      std::string word;
      while (ls >> word) {
        char* end = nullptr;
        float f = std::strtof(word.c_str(), &end);
        if (end != word.c_str() + word.size()) {
          throw Error(Errc::kInvalidTensor, "line " + std::to_string(lineno) + ": bad number");
        }
        v.push_back(f);
      }
      if (v.size() != count) {
        throw Error(Errc::kInvalidTensor, "line " + std::to_string(lineno) + ": expected " +
                                              std::to_string(count) + " floats");
      }
      out.push_back(Tensor::from_floats(*shape, v));
    }
  }
  return out;
}

void write_inputs_file(const fs::path& path, const std::vector<Tensor>& inputs) {
  if (inputs.empty()) throw Error(Errc::kInvalidTensor, "no inputs to write");
  std::ostringstream out;
  out << "dtype=" << dtype_name(inputs.front().dtype())
      << " shape=" << shape_text(inputs.front().shape()) << "\n";
  for (const auto& t : inputs) {
    if (t.shape() != inputs.front().shape() || t.dtype() != inputs.front().dtype()) {
      throw Error(Errc::kInvalidTensor, "inputs must share dtype and shape");
    }
    if (t.dtype() == DType::kInt64) {
      auto v = t.to_ints();
      for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    } else {
      auto v = t.to_floats();
      char buf[32];
      for (std::size_t i = 0; i < v.size(); ++i) {
        // %.9g round-trips float32.
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v[i]));
        out << (i ? " " : "") << buf;
      }
    }
    out << "\n";
  }
  spit(path, out.str());
}

proto::SubmitPipelineJob build_submission(const std::vector<StageFile>& stages,
                                          ExecutionMode mode, const std::vector<Tensor>& inputs,
                                          Codec codec) {
  if (stages.empty()) throw Error(Errc::kEmptyStages, "at least one stage is required");
  proto::SubmitPipelineJob job;
  job.mode = mode;
  std::string fingerprint;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const StageFile& s = stages[k];
    const std::string sum = sha256_hex(s.artefact);
    if (s.sha256 && *s.sha256 != sum) {
      throw Error(Errc::kChecksumMismatch, "stage " + std::to_string(k) + " (" + s.artefact_id +
                                               ") does not match its recorded sha256");
    }
    PartitionManifest m;
    m.stage_index = static_cast<std::uint32_t>(k);
    m.artefact_id = s.artefact_id;
    m.blob_checksum = sum;
    m.blob_size_bytes = s.artefact.size();
    m.memory_footprint_bytes = s.memory_footprint_bytes;
    m.input_shape = s.input_shape;
    m.output_shape = s.output_shape;
    m.eager_broadcast = k == 0;
    job.stages.push_back(std::move(m));
    job.blobs.push_back(base64_encode(s.artefact));
    fingerprint += sum;
  }
  job.pipeline_id = "pipeline-" + sha256_hex(fingerprint).substr(0, 12);

  PipelineSpec spec;
  spec.pipeline_id = job.pipeline_id;
  spec.stages = job.stages;
  spec.execution_mode = mode;
  spec.input_count = static_cast<std::uint32_t>(std::max<std::size_t>(inputs.size(), 1));
  validate_pipeline_spec(spec);

  if (inputs.empty()) throw Error(Errc::kInvalidTensor, "no inputs");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].shape() != job.stages.front().input_shape) {
      throw Error(Errc::kShapeMismatch,
                  "input " + std::to_string(i) + " has shape " + shape_text(inputs[i].shape()) +
                      ", stage 0 expects " + shape_text(job.stages.front().input_shape));
    }
    job.inputs.push_back(encode_payload(inputs[i], codec));
  }
  return job;
}

proto::SubmitPipelineJob build_submission(const std::vector<fs::path>& stage_files,
                                          ExecutionMode mode, const fs::path& inputs_file,
                                          Codec codec) {
  if (stage_files.empty()) throw Error(Errc::kEmptyStages, "at least one --stage is required");
  std::vector<StageFile> stages;
  for (const auto& p : stage_files) stages.push_back(read_stage_file(p));
  return build_submission(stages, mode, read_inputs_file(inputs_file), codec);
}

std::string render_result(const proto::JobResult& r) {
  std::ostringstream out;
  out << "job " << r.job_id << ": " << r.status << "\n";
  if (!r.error.empty()) out << "error: " << r.error << "\n";
  if (r.status == "complete") {
    out << "predicted class: " << r.predicted_class << "\n";
    out << "mean logits:";
    char buf[32];
    for (double v : r.mean_logits) {
      std::snprintf(buf, sizeof buf, " %.6f", v);
      out << buf;
    }
    out << "\n";
  }
  const Json& m = r.metrics;
  if (m.contains("makespan_ms")) out << "makespan: " << m.at("makespan_ms") << " ms\n";
  if (m.contains("peak_rss_bytes")) {
    for (const auto& [w, b] : m.at("peak_rss_bytes").items()) {
      out << "peak rss " << w << ": " << b << " B\n";
    }
  }
  if (m.contains("compression")) {
    const Json& c = m.at("compression");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", c.value("ratio_pct", 0.0));
    out << "compression: " << c.value("compressed_bytes", 0) << " of " << c.value("raw_bytes", 0)
        << " bytes (" << buf << "% saved)\n";
  }
  return out.str();
}

}  // namespace crowdpipe::sdk
