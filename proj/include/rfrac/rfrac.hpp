#pragma once

// Umbrella header for the solver library (the CLI lives in rfrac/cli.hpp).

#include "rfrac/bc.hpp"
#include "rfrac/chemistry.hpp"
#include "rfrac/config.hpp"
#include "rfrac/coupler.hpp"
#include "rfrac/equidim.hpp"
#include "rfrac/error.hpp"
#include "rfrac/flow.hpp"
#include "rfrac/linalg.hpp"
#include "rfrac/mesh.hpp"
#include "rfrac/run.hpp"
#include "rfrac/timeseries.hpp"
#include "rfrac/transport.hpp"
#include "rfrac/vtk.hpp"
