#pragma once

#include "platesim/config.hpp"
#include "platesim/controller.hpp"
#include "platesim/detector.hpp"
#include "platesim/drone.hpp"
#include "platesim/geometry.hpp"
#include "platesim/mapper.hpp"
#include "platesim/rng.hpp"
#include "platesim/runner.hpp"
#include "platesim/svg.hpp"
#include "platesim/telemetry.hpp"
#include "platesim/transport.hpp"
#include "platesim/world.hpp"
