//
// Copyright 2026 The dppca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPPCA_ERRORS_HPP_
#define DPPCA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dppca {

// Thrown when an estimator is handed fewer samples than it needs to produce
// any output at all (as opposed to producing a low-quality one).
class InsufficientSamplesError : public std::runtime_error {
 public:
  explicit InsufficientSamplesError(const std::string& what)
      : std::runtime_error(what) {}
};

// Thrown when a private estimator ran but every candidate output was
// suppressed by its own noise thresholding, so there is nothing to return.
class EstimationFailedError : public std::runtime_error {
 public:
  explicit EstimationFailedError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace dppca

#endif  // DPPCA_ERRORS_HPP_
