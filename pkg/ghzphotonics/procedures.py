import logging
import numpy as np
from pymeasure.experiment import (Procedure, IntegerParameter, FloatParameter, BooleanParameter,
                                  VectorParameter, ListParameter)
from ghzphotonics.utils import dump_json
from ghzphotonics.quantum import fidelity, ghz_state
from ghzphotonics.witness import evaluate_witness, simulate_witness_counts
from ghzphotonics.tomography import (generate_settings, simulate_counts, mle_reconstruct, bootstrap,
                                     seed_sequence)
from ghzphotonics.swapping import swap_analyze, swap_from_tomography
from ghzphotonics.hardy import (HardySettings, REFERENCE_SETTINGS, hardy_evaluate, search_settings,
                                white_noise_threshold, simulate_hardy_counts, NoThresholdError)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

STOP_WARNING = "Caught the stop flag in the '{}' procedure"
MAX_SEED = 2 ** 64 - 1


class SimulationProcedure(Procedure):
    """
    Simulated counting experiment on the postselected state of a Circuit.
    Subclasses fill self.results with JSON-ready values in execute().
    """
    circuit = None
    # outputs
    results = None

    seed = IntegerParameter("Seed", default=0, minimum=0, maximum=MAX_SEED)
    n_resamples = IntegerParameter("Bootstrap Resamples", default=1000, minimum=2, maximum=10 ** 7)
    n_workers = IntegerParameter("Worker Threads", default=1, minimum=1, maximum=1024)

    @classmethod
    def connect_circuit(cls, circuit):
        # class level: the last Circuit to request the class owns it until the next request
        cls.circuit = circuit

    @property
    def rate(self):
        return getattr(self.circuit, "rate", None)

    def startup(self):
        if self.circuit is None:
            raise ValueError("no circuit connected to the '{}' procedure".format(self.__class__.__name__))
        log.info("Starting %s procedure (seed %d)", self.__class__.__name__.lower(), self.seed)

    def shutdown(self):
        log.info("Finished %s procedure", self.__class__.__name__.lower())

    def parameter_dict(self):
        return {name: parameter.value for name, parameter in self.parameter_objects().items()}

    def file_name(self):
        return "{}_{}_seed{:d}.json".format(self.__class__.__name__.lower(), self.circuit.name, self.seed)

    def save(self, file_path):
        dump_json({"procedure": self.__class__.__name__.lower(),
                   "circuit": self.circuit.name,
                   "noise": self.circuit.noise.to_dict(),
                   "rate": self.rate,
                   "parameters": self.parameter_dict(),
                   "results": self.results}, file_path)


class Witness(SimulationProcedure):
    # outputs
    report = None

    t_hv = FloatParameter("H/V Acquisition Time", units="s", default=10000, minimum=1e-9, maximum=1e9)
    t_mk = FloatParameter("M_k Acquisition Time", units="s", default=2000, minimum=1e-9, maximum=1e9)

    def execute(self):
        if self.should_stop():
            log.warning(STOP_WARNING.format(self.__class__.__name__))
            return
        rho, _ = self.circuit.state()
        exact = evaluate_witness(rho)
        self.report = simulate_witness_counts(rho, self.rate, self.t_hv, self.t_mk, seed=self.seed,
                                              n_resamples=self.n_resamples, n_workers=self.n_workers)
        self.results = {"exact": exact.to_dict(), "simulated": self.report.to_dict()}


class Tomography(SimulationProcedure):
    # outputs
    dataset = None
    reconstruction = None

    time_per_setting = FloatParameter("Time per Setting", units="s", default=267, minimum=1e-9, maximum=1e9)
    reconstruct = BooleanParameter("Reconstruct", default=True)
    bootstrap_fidelity = BooleanParameter("Bootstrap the Fidelity", default=False)
    tol = FloatParameter("Likelihood Tolerance", default=1e-10, minimum=0, maximum=1)
    max_iter = IntegerParameter("Maximum Iterations", default=5000, minimum=1, maximum=10 ** 7)

    def execute(self):
        if self.should_stop():
            log.warning(STOP_WARNING.format(self.__class__.__name__))
            return
        seeds = seed_sequence(self.seed).spawn(2)
        rho, _ = self.circuit.state()
        self.dataset = simulate_counts(rho, generate_settings(rho.n_qubits), self.rate, self.time_per_setting,
                                       seed=seeds[0])
        self.results = {"total_counts": self.dataset.total_counts,
                        "true_fidelity": fidelity(rho, ghz_state(rho.n_qubits))}
        if not self.reconstruct:
            return
        self.reconstruction = mle_reconstruct(self.dataset, tol=self.tol, max_iter=self.max_iter)
        self.results["reconstruction"] = self.reconstruction.to_dict()
        self.results["fidelity"] = fidelity(self.reconstruction.rho, ghz_state(rho.n_qubits))
        if self.should_stop():
            log.warning(STOP_WARNING.format(self.__class__.__name__))
            return
        if self.bootstrap_fidelity:
            target = ghz_state(rho.n_qubits)

            def functional(dataset):
                return fidelity(mle_reconstruct(dataset, tol=self.tol, max_iter=self.max_iter).rho, target)

            mean, std = bootstrap(self.dataset, functional, n_resamples=self.n_resamples, seed=seeds[1],
                                  n_workers=self.n_workers)
            self.results["fidelity_bootstrap"] = {"mean": mean, "std": std}


class Swap(SimulationProcedure):
    # outputs
    report = None

    discrimination_pair = ListParameter("Discrimination Pair", choices=["phi_pair", "psi_pair"],
                                        default="phi_pair")
    time_per_setting = FloatParameter("Time per Setting", units="s", default=267, minimum=1e-9, maximum=1e9)
    min_counts = IntegerParameter("Minimum Partition Counts", default=50, minimum=0, maximum=10 ** 9)

    def execute(self):
        if self.should_stop():
            log.warning(STOP_WARNING.format(self.__class__.__name__))
            return
        exact = swap_analyze(self.circuit.input_density(), self.discrimination_pair)
        rho, _ = self.circuit.state(discrimination_pair=self.discrimination_pair)
        dataset = simulate_counts(rho, generate_settings(rho.n_qubits), self.rate, self.time_per_setting,
                                  seed=self.seed)
        self.report = swap_from_tomography(dataset, self.discrimination_pair, min_counts=self.min_counts)
        self.results = {"exact": exact.to_dict(), "tomography": self.report.to_dict()}


class Hardy(SimulationProcedure):
    # outputs
    result = None

    angles = VectorParameter("Settings", length=4, units="deg", default=list(REFERENCE_SETTINGS.to_degrees()))
    times = VectorParameter("Acquisition Times", length=8, units="s",
                            default=[28800, 28800] + [14400] * 6)
    search = BooleanParameter("Search Settings", default=False)
    restarts = IntegerParameter("Search Restarts", default=8, minimum=1, maximum=10 ** 4)

    def execute(self):
        if self.should_stop():
            log.warning(STOP_WARNING.format(self.__class__.__name__))
            return
        rho, _ = self.circuit.state()
        settings = HardySettings.from_degrees(*self.angles)
        if self.search:
            settings, _ = search_settings(rho, restarts=self.restarts, seed=self.seed, n_workers=self.n_workers)
        exact = hardy_evaluate(rho, settings)
        self.result = simulate_hardy_counts(rho, settings, np.array(self.times, dtype=float), self.rate,
                                            seed=self.seed, n_resamples=self.n_resamples,
                                            n_workers=self.n_workers)
        self.results = {"settings": settings.to_dict(), "exact": exact.to_dict(),
                        "simulated": self.result.to_dict()}
        try:
            p_star, fidelity_star = white_noise_threshold(settings)
            self.results["threshold"] = {"p_star": p_star, "fidelity_star": fidelity_star}
        except NoThresholdError as error:
            log.warning(str(error))
