import os
import logging
import importlib
from pymeasure.experiment import Parameter
from ghzphotonics.utils import get_config
from ghzphotonics.quantum import DensityMatrix, tensor, embed
from ghzphotonics.noise import NoiseParams, dephase_ghz, population_noise, white_noise
from ghzphotonics.components.sources import EPRSource, SandwichSource
from ghzphotonics.components.waveplates import HalfWavePlate, PhasePlate, NotAWavePlate
from ghzphotonics.components.beam_splitters import PolarizingBeamSplitter

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

DEFAULT_CONFIG = "ghz4"
INTERFERING_PAIR = (1, 2)  # photons 2 and 3


def get_procedure(procedure):
    library = importlib.import_module("ghzphotonics.procedures")
    return getattr(library, procedure)


def get_component(dictionary):
    """
    Build an optical element from its configuration entry
    {location: <module in ghzphotonics.components>, component: <class>, arguments: [...]}.
    """
    location = dictionary['location']
    component = dictionary['component']
    try:
        library = importlib.import_module("ghzphotonics.components." + location)
        return getattr(library, component)(*dictionary.get('arguments', []))
    except Exception as error:
        message = "Error loading the '{}' component: " + str(error)
        log.error(message.format(component))
        raise ValueError(message.format(component)) from error


def epr_pair():
    """(|HH> + |VV>)/sqrt(2)"""
    return EPRSource().emit()


def sandwich_source_raw():
    """(|HV> - |VH>)/sqrt(2) as emitted before alignment."""
    return SandwichSource().emit()


def apply_waveplate(state, plate, qubit):
    return plate.apply(state, qubit)


def input_state():
    """Product of two |phi+> pairs on photons (1, 2) and (3, 4)."""
    return tensor([epr_pair(), epr_pair()])


def pbs_parity_check(state, pair=INTERFERING_PAIR):
    """
    Returns:
        (postselected StateVector, success probability)
    Raises:
        PostselectionError: if the postselection never succeeds
    """
    return PolarizingBeamSplitter(pair).parity_check(state)


def pbs_parity_check_density(rho, pair=INTERFERING_PAIR):
    return PolarizingBeamSplitter(pair).parity_check_density(rho)


def _conjugate(rho, matrix, qubit):
    full = embed(matrix, [qubit], rho.n_qubits).entries
    return DensityMatrix.from_unnormalized(full @ rho.entries @ full.conj().T)


def generate_ghz_pipeline(distinguishability=1.0, phase=0.0):
    """
    Postselected four-photon state of the ideal network.
    Args:
        distinguishability: GHZ coherence factor lambda in [0, 1] (1 for
            perfectly indistinguishable photons)
        phase: GHZ relative phase set by the tiltable phase plate [rad]
    """
    if not 0 <= distinguishability <= 1:
        raise ValueError("distinguishability must lie in [0, 1], got {}".format(distinguishability))
    state, probability = pbs_parity_check(input_state())
    log.debug("Parity check succeeded with probability %g", probability)
    state = PhasePlate(phase).apply(state, 0)
    return dephase_ghz(state.density_matrix(), distinguishability)


class Circuit:
    """
    Optical network:
    Holds the sources, alignment plates, PBS and phase plate defined in the
    configuration dictionary together with the noise model and the fourfold
    rate. Simulated experiments are selected from the run() method.
    """
    def __init__(self, configuration=DEFAULT_CONFIG):
        # load configuration
        if isinstance(configuration, str):
            self.config = get_config(configuration)
            self.name = configuration
        else:
            self.config = configuration
            self.name = configuration.get('name', 'custom')
        components = self.config.get('components', {})
        # sources: one per pair, photons (1, 2) and (3, 4)
        sources = components.get('sources')
        if sources is None:
            self.sources = [EPRSource(), EPRSource()]
        else:
            self.sources = [get_component(value) for value in sources]
        if len(self.sources) != 2:
            raise ValueError("the network needs two pair sources, got {}".format(len(self.sources)))
        # alignment plates keyed by qubit
        self.alignment = []
        for value in components.get('alignment', []):
            self.alignment.append((int(value['qubit']), get_component(value)))
        # parity check
        pbs = components.get('pbs')
        self.pbs = PolarizingBeamSplitter(INTERFERING_PAIR) if pbs is None else get_component(pbs)
        # phase plate on photon 1
        phase_plate = components.get('phase_plate')
        if phase_plate is None:
            self.phase_qubit, self.phase_plate = 0, NotAWavePlate()
        else:
            self.phase_qubit, self.phase_plate = int(phase_plate.get('qubit', 0)), get_component(phase_plate)
        self.noise = NoiseParams.from_dict(self.config.get('noise', {}))
        self.rate = float(self.config.get('rate', 0.42))
        if self.rate <= 0:
            raise ValueError("the fourfold rate must be positive, got {}".format(self.rate))
        log.info("Loaded the '%s' circuit: %s", self.name, self)

    def __repr__(self):
        return "Circuit(sources={}, alignment={}, pbs={}, noise={})".format(
            self.sources, [plate for _, plate in self.alignment], self.pbs, self.noise)

    def input_state(self):
        """Aligned pure input state of the four photons before the PBS."""
        state = tensor([source.emit() for source in self.sources])
        for qubit, plate in self.alignment:
            state = plate.apply(state, qubit)
        return state

    def input_density(self):
        """Aligned mixed input state including the source fidelities."""
        rho = tensor([source.density_matrix() for source in self.sources])
        for qubit, plate in self.alignment:
            rho = _conjugate(rho, plate.jones, qubit)
        return rho

    def state(self, noise=None, discrimination_pair="phi_pair"):
        """
        Postselected four-photon density matrix.
        Args:
            noise: NoiseParams overriding the configured noise model
            discrimination_pair: 'psi_pair' inserts the HWP at 45 degrees in
                front of photon 3. On phi+ pairs this equals the plate on
                photon 4, which commutes with the parity check, so it is
                applied after the noise channels.
        Returns:
            (DensityMatrix, postselection probability)
        """
        noise = self.noise if noise is None else noise
        rho, probability = self.pbs.parity_check_density(self.input_density())
        rho = _conjugate(rho, self.phase_plate.jones, self.phase_qubit)
        rho = dephase_ghz(rho, noise.lambda_coh)
        rho = population_noise(rho, noise.epsilon_pop)
        rho = white_noise(rho, noise.p_white)
        if discrimination_pair == "psi_pair":
            rho = _conjugate(rho, HalfWavePlate(45).jones, 3)
        elif discrimination_pair != "phi_pair":
            raise ValueError("unknown discrimination pair '{}'".format(discrimination_pair))
        return rho, probability

    def procedure_class(self, procedure_type):
        """
        Return the procedure class of a given type.
        Args:
            procedure_type: witness, tomography, swap or hardy (str)
        """
        try:
            name = self.config["procedures"][procedure_type]
        except KeyError:
            raise ValueError("no '{}' procedure in the '{}' configuration".format(procedure_type, self.name))
        procedure_class = get_procedure(name)
        procedure_class.connect_circuit(self)
        return procedure_class

    def defaults(self, procedure_type):
        """Procedure parameters stored in the configuration."""
        return dict(self.config.get(procedure_type, {}))

    def run(self, procedure_type, directory=None, **kwargs):
        """
        Simulate the experiment for the given procedure_type. The procedure
        class is defined in the configuration file.
        Args:
            procedure_type: witness, tomography, swap or hardy (str)
            directory: if given the results are saved there as JSON
            **kwargs: procedure parameters (configuration values, then class
                defaults, are used if not specified)
        Returns:
            (procedure, saved file path or None)
        """
        procedure_class = self.procedure_class(procedure_type)
        parameters = self.defaults(procedure_type)
        parameters.update(kwargs)
        # check that all parameters have a value
        for name in dir(procedure_class):
            parameter = getattr(procedure_class, name)
            if isinstance(parameter, Parameter) and name not in parameters:
                message = "{} is not an optional parameter. No default is specified"
                if parameter.default is None:
                    raise ValueError(message.format(name))
        procedure = procedure_class(**parameters)
        procedure.refresh_parameters()
        try:
            procedure.startup()
            procedure.execute()
        finally:
            procedure.shutdown()
        file_path = None
        if directory is not None:
            if not os.path.isdir(directory):
                os.makedirs(directory)
            file_path = os.path.join(directory, procedure.file_name())
            procedure.save(file_path)
        return procedure, file_path
