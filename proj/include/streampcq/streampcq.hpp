#pragma once

#include "streampcq/bitio.hpp"
#include "streampcq/bitstream.hpp"
#include "streampcq/calibration.hpp"
#include "streampcq/csv.hpp"
#include "streampcq/error.hpp"
#include "streampcq/evaluation.hpp"
#include "streampcq/fdist.hpp"
#include "streampcq/fit.hpp"
#include "streampcq/logistic.hpp"
#include "streampcq/model.hpp"
#include "streampcq/pointcloud.hpp"
#include "streampcq/rng.hpp"
#include "streampcq/schema.hpp"
#include "streampcq/stats.hpp"
#include "streampcq/subjective.hpp"
#include "streampcq/tlv.hpp"
