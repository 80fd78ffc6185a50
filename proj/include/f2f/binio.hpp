// Copyright 2026 The f2f Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef F2F_BINIO_HPP_
#define F2F_BINIO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "f2f/core.hpp"

namespace f2f {

// Little-endian binary container helpers shared by the F2FPRIOR1 / F2FXFER1 /
// F2FMOUTH1 formats: a magic string, u64 dimensions, then raw f64/u64 arrays.
// Writers emit host byte order; the formats target little-endian hosts.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    path_ = path;
  }
  void magic(const char* m) { out_.write(m, static_cast<std::streamsize>(std::strlen(m))); }
  void u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), 8); }
  void f64(double v) { out_.write(reinterpret_cast<const char*>(&v), 8); }
  void f64_array(const double* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
  }
  void f64_array(const VecX& v) { f64_array(v.data(), static_cast<std::size_t>(v.size())); }
  /// Row-major regardless of Eigen's internal (column-major) layout.
  void f64_matrix(const MatX& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void u64_array(const std::vector<std::uint64_t>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * 8));
  }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path);
    path_ = path;
  }
  void expect_magic(const char* m) {
    const std::size_t n = std::strlen(m);
    std::vector<char> buf(n);
    in_.read(buf.data(), static_cast<std::streamsize>(n));
    if (!in_ || std::memcmp(buf.data(), m, n) != 0)
      throw IoError(path_ + ": bad magic, expected " + m);
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    in_.read(reinterpret_cast<char*>(&v), 8);
    check();
    return v;
  }
  double f64() {
    double v = 0;
    in_.read(reinterpret_cast<char*>(&v), 8);
    check();
    return v;
  }
  VecX f64_array(std::size_t n) {
    VecX v(static_cast<Eigen::Index>(n));
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
    check();
    return v;
  }
  MatX f64_matrix(std::size_t rows, std::size_t cols) {
    MatX m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    return m;
  }
  std::vector<std::uint64_t> u64_array(std::size_t n) {
    std::vector<std::uint64_t> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
    check();
    return v;
  }

 private:
  void check() {
    if (!in_) throw IoError(path_ + ": truncated or unreadable");
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace f2f

#endif  // F2F_BINIO_HPP_
