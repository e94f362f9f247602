#pragma once

// Umbrella header.

#include "pnf/active.hpp"
#include "pnf/baselines.hpp"
#include "pnf/bayes.hpp"
#include "pnf/gnn.hpp"
#include "pnf/graph.hpp"
#include "pnf/ingest/canonical.hpp"
#include "pnf/ingest/csv.hpp"
#include "pnf/ingest/preprocess.hpp"
#include "pnf/ingest/psplib.hpp"
#include "pnf/ingest/surrogate.hpp"
#include "pnf/loss.hpp"
#include "pnf/metrics.hpp"
#include "pnf/rbm.hpp"
#include "pnf/synthgen.hpp"
#include "pnf/temporal.hpp"
#include "pnf/tensor.hpp"
#include "pnf/train.hpp"
#include "pnf/version.hpp"
#include "pnf/work_model.hpp"
