import math

import numpy as np
from hypothesis import strategies as st

from measure_steer import BasisAngles, DensityMatrix, PureState, TargetFrame

angles = st.builds(
    BasisAngles,
    st.floats(0, math.pi),
    st.floats(0, 2 * math.pi, exclude_max=True),
)


@st.composite
def bloch_vectors(draw, max_radius=1.0):
    theta = draw(st.floats(0, math.pi))
    phi = draw(st.floats(0, 2 * math.pi))
    r = draw(st.floats(0, max_radius))
    return r * np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


density_matrices = bloch_vectors().map(DensityMatrix.from_bloch)
pure_states = st.builds(PureState.from_bloch, st.floats(0, math.pi), st.floats(0, 2 * math.pi))
frames = pure_states.map(TargetFrame.from_target)
