// Umbrella header for the whole library.
#pragma once

#include "evball/blob.hpp"
#include "evball/camera.hpp"
#include "evball/detection.hpp"
#include "evball/ekf.hpp"
#include "evball/em.hpp"
#include "evball/eros.hpp"
#include "evball/event.hpp"
#include "evball/event_io.hpp"
#include "evball/flight.hpp"
#include "evball/hough.hpp"
#include "evball/image.hpp"
#include "evball/median.hpp"
#include "evball/metrics.hpp"
#include "evball/pairing.hpp"
#include "evball/particle.hpp"
#include "evball/pipeline.hpp"
#include "evball/prediction_study.hpp"
#include "evball/rng.hpp"
#include "evball/sim.hpp"
#include "evball/tracker.hpp"
#include "evball/trail_filter.hpp"
#include "evball/triangulate.hpp"
