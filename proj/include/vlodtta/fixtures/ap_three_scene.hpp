#pragma once

// Generated by tests/oracles/coco_reference.py from pycocotools; do not edit.

#include <vector>

#include "vlodtta/eval.hpp"

namespace vlodtta::fixtures {

inline std::vector<ImageRecord> ap_three_scene() {
  std::vector<ImageRecord> images(3);
  images[0].ground_truth.push_back({Box(268.83, 375.26, 331.24, 423.11), 0});
  images[0].ground_truth.push_back({Box(329.11, 59.86, 419.23, 170.25), 1});
  images[0].detections.push_back({Box(260.85, 372.65, 326.5, 421.05), 0, 0.58});
  images[0].detections.push_back({Box(273.65, 375.61, 341.95, 421.9), 0, 0.69});
  images[0].detections.push_back({Box(322.08, 65.41, 411.97, 161.59), 1, 0.7});
  images[0].detections.push_back({Box(335.43, 60.08, 425.82, 167.5), 0, 0.91});
  images[0].detections.push_back({Box(295.87, 64.83, 378.36, 156.91), 2, 0.54});
  images[0].detections.push_back({Box(265.87, 386.67, 289.25, 494.94), 2, 0.66});
  images[1].ground_truth.push_back({Box(43.85, 412.5, 109.39, 455.15), 0});
  images[1].ground_truth.push_back({Box(154.09, 484.21, 224.51, 568.94), 1});
  images[1].detections.push_back({Box(42.4, 406.86, 100.25, 454.56), 0, 0.36});
  images[1].detections.push_back({Box(60.82, 397.46, 125.8, 442.59), 0, 0.08});
  images[1].detections.push_back({Box(40.34, 413.92, 113.93, 466.77), 0, 0.79});
  images[1].detections.push_back({Box(155.23, 489.72, 222.31, 573.71), 1, 0.06});
  images[1].detections.push_back({Box(114.11, 25.6, 143.23, 67.16), 0, 0.18});
  images[1].detections.push_back({Box(109.35, 23.03, 183.23, 120.55), 1, 0.19});
  images[2].ground_truth.push_back({Box(112.74, 173.34, 209.8, 206.37), 1});
  images[2].ground_truth.push_back({Box(55.55, 498.98, 150.23, 612.88), 1});
  images[2].ground_truth.push_back({Box(342.01, 32.91, 431.88, 83.78), 0});
  images[2].ground_truth.push_back({Box(283.71, 467.8, 381.19, 517.96), 0});
  images[2].detections.push_back({Box(110.42, 174.22, 196.53, 210.82), 0, 0.29});
  images[2].detections.push_back({Box(116.83, 178.84, 215.67, 211.78), 1, 0.35});
  images[2].detections.push_back({Box(57.48, 498.81, 148.71, 612.84), 1, 0.67});
  images[2].detections.push_back({Box(39.52, 500.25, 125.97, 611.71), 1, 0.82});
  images[2].detections.push_back({Box(346.23, 40.87, 445.93, 94.49), 0, 0.78});
  images[2].detections.push_back({Box(337.07, 23.64, 423.23, 69.53), 0, 0.96});
  images[2].detections.push_back({Box(349.01, 34.63, 439.95, 79.92), 0, 0.76});
  images[2].detections.push_back({Box(301.38, 470.64, 405.71, 523.27), 0, 0.11});
  images[2].detections.push_back({Box(279.59, 465.54, 379.95, 507.47), 0, 0.47});
  images[2].detections.push_back({Box(287.96, 463.48, 384.97, 518.96), 0, 0.74});
  images[2].detections.push_back({Box(12.51, 111.3, 105.96, 143.89), 0, 0.07});
  images[2].detections.push_back({Box(381.85, 210.34, 457.4, 273.77), 1, 0.12});
  return images;
}

inline constexpr int kApThreeSceneClasses = 3;
inline constexpr double kApThreeSceneMap = 0.38539014615747286;
inline constexpr double kApThreeSceneAp50 = 0.7686822253653935;
inline constexpr double kApThreeSceneAp75 = 0.38260254596888255;

}  // namespace vlodtta::fixtures
