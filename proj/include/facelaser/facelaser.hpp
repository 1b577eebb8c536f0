#pragma once

#include "facelaser/cloud.hpp"
#include "facelaser/config.hpp"
#include "facelaser/coverage.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/io.hpp"
#include "facelaser/kdtree.hpp"
#include "facelaser/pathplan.hpp"
#include "facelaser/ply.hpp"
#include "facelaser/polygon.hpp"
#include "facelaser/registration.hpp"
#include "facelaser/segmentation.hpp"
#include "facelaser/simulator.hpp"
#include "facelaser/synthetic.hpp"
#include "facelaser/fixtures.hpp"
