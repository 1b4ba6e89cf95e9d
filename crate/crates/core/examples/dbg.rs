use risim::linkmetrics::LinkState;
use risim::powalloc;
use risim::simkit::Scenario;

fn main() {
    let mut s = Scenario::desk_default();
    s.velocity_max_mps = 40.0;
    let d = s.derive().unwrap();
    println!("t_c={:.4e} n_c={} t_p={} pf={:.4} n_max={} psi={} slots={}",
        d.coherence.slot_duration_s, d.coherence.coherence_block_symbols,
        d.coherence.pilot_overhead_symbols, d.coherence.pilot_fraction(),
        d.n_max, d.psi_slots, d.num_slots);
    for n in 0..d.n_max {
        println!("rho({n}) = {:.5}", d.rho_at(n).unwrap());
    }
    // Representative UE ~40 m from RIS, 50 m from gNB.
    let mk = |rho: f64, alpha: bool| LinkState {
        rho_direct: rho, rho_cascaded: rho,
        beta_direct: 3.9e8, beta_cascaded: 2.74e6,
        omega0: d.omega_direct, omega1: d.omega_gnb_ris, omega2: d.omega_ris_ue,
        noise_power_w: s.noise_w,
        interference_mu: d.interference_mu, interference_sigma: s.interference_sigma,
        power_w: 0.0, bandwidth_per_rb_hz: s.bandwidth_per_rb_hz,
        rbs_per_ue: d.rbs_per_ue,
        pilot_overhead_symbols: d.coherence.pilot_overhead_symbols,
        coherence_block_symbols: d.coherence.coherence_block_symbols,
        alpha, num_elements: s.num_ris_elements,
    };
    println!("omegas: {:.4} {:.4} {:.4}", d.omega_direct, d.omega_gnb_ris, d.omega_ris_ue);
    for (label, rho, alpha) in [("ref(k0)", d.rho_at(0).unwrap(), true), ("n=1", d.rho_at(1).unwrap(), false), ("n=2", d.rho_at(2).unwrap(), false)] {
        let st = mk(rho, alpha);
        let a = powalloc::expected_gain_bracket(&st);
        let b = powalloc::noise_slope(&st);
        let c = s.noise_w + s.interference_mean_w;
        let w_eff = d.rbs_per_ue as f64 * st.overhead_factor() * s.bandwidth_per_rb_hz;
        let coeffs = vec![powalloc::PowerCoefficients{a, b_noise: b, c, w_eff}; s.num_ues];
        let alloc = powalloc::solve(&coeffs, s.p_tot_w, d.rbs_per_ue, powalloc::RateMode::Expected, &Default::default()).unwrap();
        let p = alloc.powers_w[0];
        let sinr = a*p/(b*p+c);
        println!("{label}: rho={rho:.4} A={a:.4e} B={b:.4e} P={p:.4e} SINR={sinr:.1} log2={:.2} rate={:.4e}",
            (1.0+sinr).log2(), coeffs[0].rate_bps(p));
    }
}
