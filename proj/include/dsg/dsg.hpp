#pragma once

#include "dsg/backends.hpp"
#include "dsg/codec.hpp"
#include "dsg/core_graph.hpp"
#include "dsg/correlation.hpp"
#include "dsg/dataset_io.hpp"
#include "dsg/errors.hpp"
#include "dsg/graph_io.hpp"
#include "dsg/metrics.hpp"
#include "dsg/preambles.hpp"
#include "dsg/qg_pipeline.hpp"
#include "dsg/report.hpp"
#include "dsg/scoring.hpp"
#include "dsg/text.hpp"
