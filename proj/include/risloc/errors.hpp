// Copyright 2026-present the ris-locate project
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

#pragma once

#include <stdexcept>
#include <string>

namespace risloc {

// Base class for all recoverable toolkit errors. Monte-Carlo drivers catch
// this type to count per-trial failures; anything else is a bug and escapes.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateGeometryError : public Error {
  public:
    explicit DegenerateGeometryError(const std::string& what) : Error(what) {}
};

// c*tau does not exceed the anchor separation, so no ellipse exists.
class InfeasibleToaError : public Error {
  public:
    explicit InfeasibleToaError(const std::string& what) : Error(what) {}
};

class NoFeasibleNuError : public Error {
  public:
    explicit NoFeasibleNuError(const std::string& what) : Error(what) {}
};

class SingularFimError : public Error {
  public:
    SingularFimError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}
    double condition() const { return condition_; }

  private:
    double condition_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Wraps an error thrown inside one stage of the estimation pipeline.
class PipelineStageError : public Error {
  public:
    PipelineStageError(const std::string& stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

}  // namespace risloc
