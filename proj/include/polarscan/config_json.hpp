#pragma once

#include <nlohmann/json.hpp>

#include "polarscan/forward_model.hpp"

namespace polarscan {

// Insertion-ordered variant used for every file this project writes, so
// emitted JSON is byte-stable.
using Json = nlohmann::ordered_json;

template <typename J>
void to_json(J& j, const SceneSpec& s) {
  j = J{{"bar_length_m", s.bar_length_m},
        {"bar_diameter_m", s.bar_diameter_m},
        {"center_depth_m", s.center_depth_m},
        {"phi_deg", s.phi_deg},
        {"theta_deg", s.theta_deg},
        {"soil_rel_permittivity", s.soil_rel_permittivity},
        {"soil_conductivity_s_per_m", s.soil_conductivity_s_per_m},
        {"antenna_height_m", s.antenna_height_m},
        {"tx_rx_offset_m", s.tx_rx_offset_m},
        {"n_traces", s.n_traces},
        {"trace_step_m", s.trace_step_m},
        {"center_freq_hz", s.center_freq_hz},
        {"time_window_s", s.time_window_s},
        {"n_time_samples", s.n_time_samples},
        {"n_scatterers", s.n_scatterers},
        {"amplitude_scale", s.amplitude_scale}};
}

template <typename J>
void from_json(const J& j, SceneSpec& s) {
  j.at("bar_length_m").get_to(s.bar_length_m);
  j.at("bar_diameter_m").get_to(s.bar_diameter_m);
  j.at("center_depth_m").get_to(s.center_depth_m);
  j.at("phi_deg").get_to(s.phi_deg);
  j.at("theta_deg").get_to(s.theta_deg);
  j.at("soil_rel_permittivity").get_to(s.soil_rel_permittivity);
  j.at("soil_conductivity_s_per_m").get_to(s.soil_conductivity_s_per_m);
  j.at("antenna_height_m").get_to(s.antenna_height_m);
  j.at("tx_rx_offset_m").get_to(s.tx_rx_offset_m);
  j.at("n_traces").get_to(s.n_traces);
  j.at("trace_step_m").get_to(s.trace_step_m);
  j.at("center_freq_hz").get_to(s.center_freq_hz);
  j.at("time_window_s").get_to(s.time_window_s);
  j.at("n_time_samples").get_to(s.n_time_samples);
  j.at("n_scatterers").get_to(s.n_scatterers);
  j.at("amplitude_scale").get_to(s.amplitude_scale);
}

}  // namespace polarscan
