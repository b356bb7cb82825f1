// Copyright 2026 The Lanecast Authors
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

#ifndef LANECAST__ERRORS_HPP_
#define LANECAST__ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace lanecast
{

// Exit-code families used by the command line tool.
enum class ErrorFamily { config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error
{
public:
  Error(ErrorFamily family, const std::string & what) : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const noexcept { return family_; }

private:
  ErrorFamily family_;
};

#define LANECAST_DEFINE_ERROR(Name, Family)                                   \
  class Name : public Error                                                   \
  {                                                                           \
  public:                                                                     \
    explicit Name(const std::string & what) : Error(ErrorFamily::Family, what) \
    {                                                                         \
    }                                                                         \
  };

// geometry / agents
LANECAST_DEFINE_ERROR(StationaryAgent, data)
LANECAST_DEFINE_ERROR(DegenerateDirection, data)
LANECAST_DEFINE_ERROR(InvalidTrajectory, data)
// lane processing
LANECAST_DEFINE_ERROR(NoLaneForAgent, data)
LANECAST_DEFINE_ERROR(AgentFiltered, data)
LANECAST_DEFINE_ERROR(InvalidLaneChunk, data)
// numerics
LANECAST_DEFINE_ERROR(ShapeMismatch, numeric)
LANECAST_DEFINE_ERROR(NonScalarLoss, numeric)
LANECAST_DEFINE_ERROR(StaleTape, numeric)
LANECAST_DEFINE_ERROR(MissingGradient, numeric)
LANECAST_DEFINE_ERROR(CheckpointError, data)
// model
LANECAST_DEFINE_ERROR(WrongRasterSize, numeric)
LANECAST_DEFINE_ERROR(MaskedLaneRequested, numeric)
LANECAST_DEFINE_ERROR(NumericDivergence, numeric)
LANECAST_DEFINE_ERROR(MaskedGroundTruthLane, data)
LANECAST_DEFINE_ERROR(EmptyDataset, data)
// metrics
LANECAST_DEFINE_ERROR(HorizonTooLong, config)
// data io
LANECAST_DEFINE_ERROR(ParseError, data)
LANECAST_DEFINE_ERROR(SchemaVersionMismatch, data)
LANECAST_DEFINE_ERROR(TooFewScenes, data)
LANECAST_DEFINE_ERROR(InvalidTemplate, config)
LANECAST_DEFINE_ERROR(ConfigError, config)

#undef LANECAST_DEFINE_ERROR

}  // namespace lanecast

#endif  // LANECAST__ERRORS_HPP_
