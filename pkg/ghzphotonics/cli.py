"""
Command-line interface: the state, witness, tomography, swapping and Hardy
workflows on file-based inputs and outputs, plus a one-command reproduction
table of the experiment's headline numbers.

Angles are given in degrees on the command line and in settings files.
Exit status is 0 on success, 1 on a validation error or a failed
reproduction check and 2 when a reconstruction does not converge.
"""
import sys
import logging
import argparse
import numpy as np
from ghzphotonics.utils import dump_json, load_json
from ghzphotonics.quantum import (DensityMatrix, StateVector, ghz_state, fidelity, random_density_matrix,
                                  random_state_vector, projector_xz)
from ghzphotonics.noise import NoiseParams, noise_state, calibrate_from_witness
from ghzphotonics.circuit import Circuit, DEFAULT_CONFIG, INTERFERING_PAIR, input_state, pbs_parity_check
from ghzphotonics.components.beam_splitters import PARITY_PROJECTOR
from ghzphotonics.witness import evaluate_witness, simulate_witness_counts, witness_operator
from ghzphotonics.tomography import (generate_settings, simulate_counts, expected_counts, efficiency_correct,
                                     mle_reconstruct, bootstrap, seed_sequence, read_counts, write_counts,
                                     read_efficiencies)
from ghzphotonics.swapping import swap_analyze, swap_from_tomography
from ghzphotonics.hardy import (HardySettings, REFERENCE_SETTINGS, hardy_evaluate, search_settings,
                                white_noise_threshold, simulate_hardy_counts, joint_probability, load_settings)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

EXIT_SUCCESS = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGENCE = 2
MAX_SEED = 2 ** 64 - 1
REFERENCE_TERMS = (0.0479, 0.0131, 0.0029, 0.0029, 0.0029, 0.0018, 0.0018, 0.0018)
REFERENCE_VALUE = 0.0209
THRESHOLD_FIDELITY = 0.9506
CALIBRATED_FIDELITY = 0.98095


class UsageError(ValueError):
    """Unknown subcommand or malformed flag."""


class NonConvergenceError(RuntimeError):
    """A numerical routine stopped before reaching its tolerance."""


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class RunConfig:
    """
    Validated run parameters: command-line flags on top of the named
    configuration.
    Args:
        noise: NoiseParams of the modelled state
        noise_given: True if any noise flag was passed
        rate: fourfold coincidence rate [1/s]
        time: acquisition time [s] or None for the configured default
        seed: RNG seed or None
        threads: worker threads
        state: 'ghz', 'model', 'input' or the path of a state JSON file
        settings: path of a Hardy settings JSON file or None
        out: output path or None for stdout
    """
    def __init__(self, noise, noise_given=False, rate=0.42, time=None, seed=None, threads=1, state="ghz",
                 settings=None, out=None):
        if rate <= 0:
            raise ValueError("--rate must be positive, got {}".format(rate))
        if time is not None and time <= 0:
            raise ValueError("--time must be positive, got {}".format(time))
        if seed is not None and not 0 <= seed <= MAX_SEED:
            raise ValueError("--seed must lie in [0, 2**64 - 1], got {}".format(seed))
        if threads < 1:
            raise ValueError("--threads must be at least 1, got {}".format(threads))
        self.noise = noise
        self.noise_given = noise_given
        self.rate = float(rate)
        self.time = time
        self.seed = seed
        self.threads = threads
        self.state = state
        self.settings = settings
        self.out = out

    @classmethod
    def from_args(cls, args, circuit):
        flags = (args.noise_eps, args.noise_lambda, args.noise_white)
        noise_given = any(flag is not None for flag in flags)
        if args.state == "model":
            base = circuit.noise
        else:
            base = NoiseParams()
        noise = NoiseParams(epsilon_pop=base.epsilon_pop if args.noise_eps is None else args.noise_eps,
                            lambda_coh=base.lambda_coh if args.noise_lambda is None else args.noise_lambda,
                            p_white=base.p_white if args.noise_white is None else args.noise_white)
        rate = circuit.rate if args.rate is None else args.rate
        return cls(noise, noise_given=noise_given, rate=rate, time=args.time, seed=args.seed,
                   threads=args.threads, state=args.state, settings=args.settings, out=args.out)

    def require_seed(self, command):
        if self.seed is None:
            raise ValueError("'{}' is stochastic and needs --seed".format(command))
        return self.seed


def resolve_state(run, circuit):
    """Four-photon density matrix selected by --state."""
    if run.state == "ghz":
        return noise_state(run.noise)
    if run.state == "model":
        rho, _ = circuit.state(noise=run.noise)
        return rho
    if run.state == "input":
        return circuit.input_density()
    dictionary = load_json(run.state)
    if "amps_re" in dictionary:
        return StateVector.from_dict(dictionary).normalize().density_matrix()
    return DensityMatrix.from_dict(dictionary)


def resolve_settings(run, circuit):
    if run.settings is not None:
        return load_settings(run.settings)
    angles = circuit.defaults("hardy").get("angles")
    return REFERENCE_SETTINGS if angles is None else HardySettings.from_degrees(*angles)


def emit(dictionary, out=None):
    text = dump_json(dictionary, out)
    if out is None:
        sys.stdout.write(text)


def command_state(args, run, circuit):
    rho = resolve_state(run, circuit)
    emit(rho.to_dict(), run.out)
    return EXIT_SUCCESS


def command_witness(args, run, circuit):
    rho = resolve_state(run, circuit)
    if not args.simulate:
        emit(evaluate_witness(rho).to_dict(), run.out)
        return EXIT_SUCCESS
    defaults = circuit.defaults("witness")
    t_hv = run.time if run.time is not None else defaults.get("t_hv", 10000)
    t_mk = args.t_mk if args.t_mk is not None else defaults.get("t_mk", 2000)
    efficiencies = None if args.efficiencies is None else read_efficiencies(args.efficiencies)
    report = simulate_witness_counts(rho, run.rate, t_hv, t_mk, seed=run.require_seed("witness --simulate"),
                                     n_resamples=args.resamples, n_workers=run.threads, efficiencies=efficiencies)
    if args.counts is not None:
        write_counts(report.dataset, args.counts)
    emit(report.to_dict(), run.out)
    return EXIT_SUCCESS


def command_tomo_simulate(args, run, circuit):
    if run.out is None:
        raise ValueError("'tomo simulate' writes a counts CSV and needs --out")
    rho = resolve_state(run, circuit)
    time = run.time if run.time is not None else circuit.defaults("tomography").get("time_per_setting", 267)
    efficiencies = None if args.efficiencies is None else read_efficiencies(args.efficiencies)
    dataset = simulate_counts(rho, generate_settings(rho.n_qubits), run.rate, time, efficiencies=efficiencies,
                              seed=run.require_seed("tomo simulate"))
    write_counts(dataset, run.out)
    return EXIT_SUCCESS


def command_tomo_reconstruct(args, run, circuit):
    efficiencies = None if args.efficiencies is None else read_efficiencies(args.efficiencies)
    dataset = read_counts(args.counts, efficiencies=efficiencies)
    if dataset.efficiencies is not None:
        dataset = efficiency_correct(dataset)
    result = mle_reconstruct(dataset, tol=args.tol, max_iter=args.max_iter)
    output = result.to_dict()
    target = ghz_state(dataset.n_qubits)
    output["fidelity"] = fidelity(result.rho, target)
    if args.bootstrap:
        mean, std = bootstrap(dataset, lambda d: fidelity(mle_reconstruct(d, tol=args.tol,
                                                                          max_iter=args.max_iter).rho, target),
                              n_resamples=args.bootstrap, seed=run.require_seed("tomo reconstruct --bootstrap"),
                              n_workers=run.threads)
        output["fidelity_bootstrap"] = {"mean": mean, "std": std}
    emit(output, run.out)
    if not result.converged:
        raise NonConvergenceError("MLE did not converge in {} iterations".format(args.max_iter))
    return EXIT_SUCCESS


def command_swap(args, run, circuit):
    if args.counts is not None:
        efficiencies = None if args.efficiencies is None else read_efficiencies(args.efficiencies)
        dataset = read_counts(args.counts, efficiencies=efficiencies)
        report = swap_from_tomography(dataset, args.pair, min_counts=args.min_counts)
    else:
        report = swap_analyze(resolve_state(run, circuit), args.pair)
    emit(report.to_dict(), run.out)
    return EXIT_SUCCESS


def command_hardy_eval(args, run, circuit):
    result = hardy_evaluate(resolve_state(run, circuit), resolve_settings(run, circuit))
    emit(result.to_dict(), run.out)
    return EXIT_SUCCESS


def command_hardy_search(args, run, circuit):
    seed = 0 if run.seed is None else run.seed
    settings, value = search_settings(resolve_state(run, circuit), restarts=args.restarts, seed=seed,
                                      n_workers=run.threads)
    output = settings.to_dict()
    output["I"] = value
    emit(output, run.out)
    return EXIT_SUCCESS


def command_hardy_threshold(args, run, circuit):
    settings = resolve_settings(run, circuit)
    p_star, fidelity_star = white_noise_threshold(settings)
    emit({"settings": settings.to_dict(), "p_star": p_star, "fidelity_star": fidelity_star}, run.out)
    return EXIT_SUCCESS


def command_hardy_simulate(args, run, circuit):
    rho = resolve_state(run, circuit)
    times = args.times if args.times is not None else circuit.defaults("hardy").get("times")
    if times is None:
        raise ValueError("'hardy simulate' needs --times or a configured hardy.times")
    efficiencies = None if args.efficiencies is None else read_efficiencies(args.efficiencies)
    result = simulate_hardy_counts(rho, resolve_settings(run, circuit), times, run.rate, efficiencies=efficiencies,
                                   seed=run.require_seed("hardy simulate"), n_resamples=args.resamples,
                                   n_workers=run.threads)
    if args.counts is not None:
        write_counts(result.dataset, args.counts)
    emit(result.to_dict(), run.out)
    return EXIT_SUCCESS


def _check(name, value, expected, passed):
    return {"check": name, "value": value, "expected": expected, "passed": bool(passed)}


def check_reference_terms():
    result = hardy_evaluate(ghz_state(4), REFERENCE_SETTINGS)
    terms_ok = np.all(np.abs(result.terms - np.array(REFERENCE_TERMS)) <= 1e-4)
    return _check("Hardy terms and I on the ideal GHZ state", result.value,
                  "terms {} within 1e-4, I = {} within 2e-4".format(REFERENCE_TERMS, REFERENCE_VALUE),
                  terms_ok and abs(result.value - REFERENCE_VALUE) <= 2e-4)


def check_threshold():
    _, fidelity_star = white_noise_threshold(REFERENCE_SETTINGS)
    return _check("White-noise threshold fidelity", fidelity_star, "{} within 1e-3".format(THRESHOLD_FIDELITY),
                  abs(fidelity_star - THRESHOLD_FIDELITY) <= 1e-3)


def check_search(restarts, seed, n_workers):
    settings, value = search_settings(ghz_state(4).density_matrix(), restarts=restarts, seed=seed,
                                      n_workers=n_workers)
    difference = np.mod(settings.to_array() - REFERENCE_SETTINGS.to_array() + np.pi / 2, np.pi) - np.pi / 2
    worst = float(np.max(np.abs(np.rad2deg(difference))))
    return _check("Hardy settings search", value, "I >= 0.0208 with angles within 0.5 deg (worst {:.3f})"
                  .format(worst), value >= 0.0208 and worst <= 0.5)


def check_witness_algebra(n_states, seed):
    ghz = ghz_state(4)
    direct = np.eye(16) / 2 - ghz.density_matrix().entries
    forms_ok = witness_operator().allclose(direct, atol=1e-12)
    ideal = evaluate_witness(ghz.density_matrix()).w_expect
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        rho = random_density_matrix(4, rng)
        worst = max(worst, abs(evaluate_witness(rho).fidelity - fidelity(rho, ghz)))
    return _check("Witness operator identity", ideal,
                  "<W> = -0.5 and F = <A>/2 + M/2 within 1e-10 (worst {:.2e})".format(worst),
                  forms_ok and abs(ideal + 0.5) <= 1e-12 and worst <= 1e-10)


def check_calibrated_fidelity():
    params = calibrate_from_witness(0.9897, 0.9722)
    value = evaluate_witness(noise_state(params)).fidelity
    return _check("Calibrated-noise fidelity", value, "{} within 1e-5".format(CALIBRATED_FIDELITY),
                  abs(value - CALIBRATED_FIDELITY) <= 1e-5)


def check_tomography(rate, time, n_seeds, n_resamples, seed, n_workers):
    ghz = ghz_state(4)
    exact = expected_counts(ghz.density_matrix(), generate_settings(4), rate, time)
    exact_fidelity = fidelity(mle_reconstruct(exact).rho, ghz)
    rho = noise_state(calibrate_from_witness(0.9897, 0.9722))
    true_fidelity = fidelity(rho, ghz)
    seeds = seed_sequence(seed).spawn(n_seeds + 2)
    fidelities = []
    for child in seeds[:n_seeds]:
        dataset = simulate_counts(rho, generate_settings(4), rate, time, seed=child)
        fidelities.append(fidelity(mle_reconstruct(dataset).rho, ghz))
    mean = float(np.mean(fidelities))
    dataset = simulate_counts(rho, generate_settings(4), rate, time, seed=seeds[n_seeds])
    _, sigma = bootstrap(dataset, lambda d: fidelity(mle_reconstruct(d).rho, ghz), n_resamples=n_resamples,
                         seed=seeds[n_seeds + 1], n_workers=n_workers)
    passed = exact_fidelity >= 0.999 and abs(mean - true_fidelity) <= 0.01 and 0.002 <= sigma <= 0.008
    return _check("Tomography round trip", mean,
                  "exact-data F >= 0.999 ({:.5f}), mean F within 0.01 of {:.5f}, sigma in [0.002, 0.008] ({:.4f})"
                  .format(exact_fidelity, true_fidelity, sigma), passed)


def check_swapping(rate, time, n_seeds, seed):
    ideal = swap_analyze(input_state().density_matrix(), "phi_pair")
    ideal_ok = all(abs(o.probability - 0.25) <= 1e-12 and abs(o.fidelity - 1) <= 1e-12
                   for o in ideal.outcomes.values())
    rho = noise_state(calibrate_from_witness(0.9897, 0.9722))
    averages = []
    for child in seed_sequence(seed).spawn(n_seeds):
        dataset = simulate_counts(rho, generate_settings(4), rate, time, seed=child)
        averages.append(swap_from_tomography(dataset, "phi_pair").average_fidelity)
    mean = float(np.mean(averages))
    return _check("Entanglement swapping", mean, "ideal outcomes 1/4 with F = 1, average F in [0.95, 1.0]",
                  ideal_ok and 0.95 <= mean <= 1.0)


def check_hardy_simulation(rate, times, n_seeds, n_resamples, seed, n_workers):
    rho = noise_state(calibrate_from_witness(0.9897, 0.9722))
    values, significances = [], []
    for child in seed_sequence(seed).spawn(n_seeds):
        result = simulate_hardy_counts(rho, REFERENCE_SETTINGS, times, rate, seed=child, n_resamples=n_resamples,
                                       n_workers=n_workers)
        values.append(result.value)
        significances.append(result.significance)
    mean, significance = float(np.mean(values)), float(np.mean(significances))
    return _check("Hardy experiment simulation", mean,
                  "mean I in [0.010, 0.018], mean significance >= 3 ({:.2f})".format(significance),
                  0.010 <= mean <= 0.018 and significance >= 3)


def check_oracles(n_inputs, seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    parity = np.kron(np.kron(np.eye(2), PARITY_PROJECTOR), np.eye(2))
    for _ in range(n_inputs):
        rho = random_density_matrix(4, rng)
        projectors = [projector_xz(theta) for theta in rng.uniform(0, np.pi, 4)]
        brute = np.kron(np.kron(projectors[0].entries, projectors[1].entries),
                        np.kron(projectors[2].entries, projectors[3].entries))
        worst = max(worst, abs(joint_probability(rho, projectors) - np.real(np.trace(brute @ rho.entries))))
        state = random_state_vector(4, rng)
        _, probability = pbs_parity_check(state, INTERFERING_PAIR)
        amplitudes = state.amplitudes
        worst = max(worst, abs(probability - np.real(np.vdot(amplitudes, parity @ amplitudes))))
    return _check("Brute-force oracle equivalence", worst, "max deviation <= 1e-12", worst <= 1e-12)


def command_reproduce(args, run, circuit):
    settings = circuit.defaults("reproduce")
    seed = run.seed if run.seed is not None else settings.get("seed", 0)
    seeds = seed_sequence(seed).spawn(6)
    time = circuit.defaults("tomography").get("time_per_setting", 267)
    times = circuit.defaults("hardy").get("times", [28800, 28800] + [14400] * 6)
    checks = [check_reference_terms(),
              check_threshold(),
              check_search(settings.get("search_restarts", 8), seeds[0], run.threads),
              check_witness_algebra(settings.get("random_states", 100), seeds[1]),
              check_calibrated_fidelity(),
              check_tomography(run.rate, time, settings.get("tomography_seeds", 50),
                               settings.get("tomography_resamples", 100), seeds[2], run.threads),
              check_swapping(run.rate, time, settings.get("swap_seeds", 5), seeds[3]),
              check_hardy_simulation(run.rate, times, settings.get("hardy_seeds", 100),
                                     settings.get("hardy_resamples", 1000), seeds[4], run.threads),
              check_oracles(settings.get("oracle_inputs", 1000), seeds[5])]
    width = max(len(c["check"]) for c in checks)
    lines = ["{:<{}}  {:>18}  {}".format("check", width, "value", "status")]
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        lines.append("{:<{}}  {:>18.12g}  {}".format(c["check"], width, c["value"], status))
        lines.append("{:<{}}  {}".format("", width, c["expected"]))
    print("\n".join(lines))
    if run.out is not None:
        dump_json({"seed": seed, "checks": checks}, run.out)
    failed = [c["check"] for c in checks if not c["passed"]]
    if failed:
        log.error("Failed reproduction checks: %s", ", ".join(failed))
        return EXIT_VALIDATION
    return EXIT_SUCCESS


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=DEFAULT_CONFIG, help="named configuration or YAML path")
    common.add_argument("--seed", type=int, help="RNG seed in [0, 2**64 - 1]")
    common.add_argument("--state", default="ghz",
                        help="'ghz' (GHZ state with the noise flags), 'model' (configured circuit), "
                             "'input' (the two pairs before the PBS) or a state JSON file")
    common.add_argument("--noise-eps", type=float, help="population error epsilon")
    common.add_argument("--noise-lambda", type=float, help="GHZ coherence factor lambda")
    common.add_argument("--noise-white", type=float, help="white-noise survival probability p")
    common.add_argument("--rate", type=float, help="fourfold coincidence rate [1/s]")
    common.add_argument("--time", type=float, help="acquisition time [s]")
    common.add_argument("--settings", help="Hardy settings JSON file (degrees)")
    common.add_argument("--out", help="output file, stdout if omitted")
    common.add_argument("--threads", type=int, default=1, help="worker threads")

    parser = Parser(prog="ghz_experiment", description="Four-photon GHZ experiment simulator")
    commands = parser.add_subparsers(dest="command", parser_class=Parser)
    commands.required = True

    state = commands.add_parser("state", parents=[common], help="emit the selected state as JSON")
    state.set_defaults(handler=command_state)

    witness = commands.add_parser("witness", parents=[common], help="entanglement witness report")
    witness.add_argument("--simulate", action="store_true", help="simulate the counting experiment")
    witness.add_argument("--t-mk", type=float, help="acquisition time of each M_k setting [s]")
    witness.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples")
    witness.add_argument("--counts", help="write the simulated counts CSV here")
    witness.add_argument("--efficiencies", help="detector efficiencies CSV")
    witness.set_defaults(handler=command_witness)

    tomo = commands.add_parser("tomo", help="state tomography")
    tomo_commands = tomo.add_subparsers(dest="tomo_command", parser_class=Parser)
    tomo_commands.required = True
    tomo_simulate = tomo_commands.add_parser("simulate", parents=[common], help="simulate the 3^n settings")
    tomo_simulate.add_argument("--efficiencies", help="detector efficiencies CSV")
    tomo_simulate.set_defaults(handler=command_tomo_simulate)
    tomo_reconstruct = tomo_commands.add_parser("reconstruct", parents=[common], help="maximum-likelihood state")
    tomo_reconstruct.add_argument("--counts", required=True, help="counts CSV")
    tomo_reconstruct.add_argument("--efficiencies", help="detector efficiencies CSV")
    tomo_reconstruct.add_argument("--tol", type=float, default=1e-10, help="relative likelihood tolerance")
    tomo_reconstruct.add_argument("--max-iter", type=int, default=5000, help="maximum iterations")
    tomo_reconstruct.add_argument("--bootstrap", type=int, default=0, help="bootstrap resamples of the fidelity")
    tomo_reconstruct.set_defaults(handler=command_tomo_reconstruct)

    swap = commands.add_parser("swap", parents=[common], help="entanglement swapping analysis")
    swap.add_argument("--counts", help="four-photon counts CSV; the state is used if omitted")
    swap.add_argument("--efficiencies", help="detector efficiencies CSV")
    swap.add_argument("--pair", default="phi_pair", choices=["phi_pair", "psi_pair"],
                      help="Bell states discriminated by the PBS")
    swap.add_argument("--min-counts", type=int, default=50, help="minimum counts per partition")
    swap.set_defaults(handler=command_swap)

    hardy = commands.add_parser("hardy", help="Hardy-like inequality")
    hardy_commands = hardy.add_subparsers(dest="hardy_command", parser_class=Parser)
    hardy_commands.required = True
    hardy_eval = hardy_commands.add_parser("eval", parents=[common], help="exact correlators and I")
    hardy_eval.set_defaults(handler=command_hardy_eval)
    hardy_search = hardy_commands.add_parser("search", parents=[common], help="maximize I over the angles")
    hardy_search.add_argument("--restarts", type=int, default=8, help="refined start points")
    hardy_search.set_defaults(handler=command_hardy_search)
    hardy_threshold = hardy_commands.add_parser("threshold", parents=[common], help="white-noise threshold")
    hardy_threshold.set_defaults(handler=command_hardy_threshold)
    hardy_simulate = hardy_commands.add_parser("simulate", parents=[common], help="simulate the counts")
    hardy_simulate.add_argument("--times", type=float, nargs=8, help="eight acquisition times [s]")
    hardy_simulate.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples")
    hardy_simulate.add_argument("--counts", help="write the simulated counts CSV here")
    hardy_simulate.add_argument("--efficiencies", help="detector efficiencies CSV")
    hardy_simulate.set_defaults(handler=command_hardy_simulate)

    reproduce = commands.add_parser("reproduce-paper", parents=[common], help="run the reproduction checks")
    reproduce.set_defaults(handler=command_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        circuit = Circuit(args.config)
        run = RunConfig.from_args(args, circuit)
        return args.handler(args, run, circuit)
    except NonConvergenceError as error:
        log.error(str(error))
        sys.stderr.write("error: {}\n".format(error))
        return EXIT_NONCONVERGENCE
    except (ValueError, OSError) as error:
        log.error(str(error))
        sys.stderr.write("error: {}\n".format(error))
        return EXIT_VALIDATION
