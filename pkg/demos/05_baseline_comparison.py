"""CPD against MUSIC and SOMP with the experiment harness.

The harness draws a fresh scene, combiner and noise for every trial from a
seed keyed on (base seed, sweep value, trial index), so runs are
reproducible and independent of the worker count.
"""

from covest.harness import ExperimentConfig, aggregate, run_trials

# %% A small SNR sweep

cfg = ExperimentConfig(
    n_ant=32,
    m_rf=8,
    k_sbcr=64,
    t_frm=10,
    l_ch=4,
    sweep_values=(-10.0, 0.0, 10.0),
    methods=("cpd", "music", "somp", "crlb"),
    n_trials=8,
    base_seed=5,
)
rows = aggregate(cfg, run_trials(cfg))

print(f"{'SNR':>5}  {'method':<7}{'metric':<10}{'mean':>11}{'median':>11}")
for r in rows:
    print(f"{r['sweep_value']:>5g}  {r['method']:<7}{r['metric']:<10}{r['mean']:>11.4g}{r['median']:>11.4g}")

# %% What to look for
# CPD keeps eta close to 1 even at -10 dB because it pools all K T fibres
# through a structured model. MUSIC uses only the sample covariance of the
# M_RF-dimensional outputs, and SOMP is limited by its angular grid.

# %% The same sweep from the command line
#   covest sweep --config demos/configs/small_snr.json --out covest-out
