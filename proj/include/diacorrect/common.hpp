// Copyright 2026 The DiaCorrect-CPP Authors
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

#ifndef DIACORRECT_COMMON_HPP_
#define DIACORRECT_COMMON_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diacorrect {

// All sequence-shaped data is stored time-major: row t is one frame.
template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixF = RowMatrix<float>;
using MatrixD = RowMatrix<double>;

// Binary speaker-activity grid, entries in {0, 1}.
using BinaryMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Global label/SAP frame grid. Every label matrix, SAP sequence and stacked
// feature sequence in this project lives on this grid.
inline constexpr double kFrameDuration = 0.1;     // seconds
inline constexpr int kCorpusSampleRate = 8000;    // Hz

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace diacorrect

#endif  // DIACORRECT_COMMON_HPP_
