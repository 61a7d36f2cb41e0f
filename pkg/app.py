import streamlit as st
import pandas as pd

from orbital_stability.characters import character_from_spec, kronecker_character, local_character_at
from orbital_stability.cli import DEFAULT_KRONECKER, MOMENT_CHARACTERS
from orbital_stability.config import RunConfig, RunStore
from orbital_stability.errors import DomainError
from orbital_stability.geometric_global import (
    LATTICE,
    SHARP,
    dual_kernel_eval,
    small_cell_local_eval,
    stability_threshold_scan,
)
from orbital_stability.lfunc_moments import moment_scan
from orbital_stability.newforms import SCAN_LABELS, newform_from_eta
from orbital_stability.orbital_local import (
    eval_orbital_bruteforce,
    eval_orbital_cases,
    eval_orbital_unramified,
    make_place,
    vanishing_predicted,
)
from orbital_stability.padic_core import parse_rational


def render_orbital_value(value, predicted_zero):
    z = value.value.to_complex()
    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Re", f"{z.real:.12g}")
    with col2:
        st.metric("Im", f"{z.imag:.12g}")
    with col3:
        st.metric("Branch terms", len(value.branch_trace))
    with col4:
        if value.value.is_exact_zero():
            st.success("Exact zero")
        elif predicted_zero:
            st.error("Nonzero where zero predicted")
        else:
            st.info("Nonzero")

    if value.branch_trace:
        rows = []
        for b in value.branch_trace:
            bz = b.partial.to_complex()
            rows.append({"label": b.label, "k": b.k, "r1": b.r1, "r2": b.r2, "re": bz.real, "im": bz.imag})
        st.dataframe(pd.DataFrame(rows), use_container_width=True)


st.set_page_config(page_title="Orbital Stability", layout="wide")
st.title("Orbital Stability")

store = RunStore()
ss = st.session_state

st.sidebar.title("Tools")
tool_selection = st.sidebar.radio("Select Tool", [
    "Local Orbital Integral",
    "Stability Scan",
    "Small Cell & Dual Kernel",
    "Twisted L-values",
])

with st.sidebar.expander("Saved runs"):
    runs = store.list_runs()
    chosen = st.selectbox("Stored run", [""] + runs)
    if st.button("Load run", disabled=not chosen):
        config, message = store.load_run(chosen)
        if config is None:
            st.error(message)
        else:
            ss["loaded"] = config.to_dict()
            st.success(message)
    if st.button("Delete run", disabled=not chosen):
        store.delete_run(chosen)
        st.rerun()

loaded = ss.get("loaded", {})


def saved(name, default):
    return loaded.get(name, default)


def save_box(config):
    name = st.text_input("Save these inputs as", key=f"save_{config.command}")
    if st.button("Save run", key=f"save_button_{config.command}") and name:
        st.success(store.save_run(config, name))


if tool_selection == "Local Orbital Integral":
    st.subheader("Local regular orbital integral E_p(t)")
    col1, col2 = st.columns(2)
    with col1:
        p = st.number_input("Prime p", min_value=2, value=int(saved("p", 3)), step=1)
        m = st.number_input("Level exponent m", min_value=0, value=int(saved("m", 0)), step=1)
        chi_spec = st.text_input("Character (p:<p>,n:<n>,g:<a> | kronecker:<d> | trivial)", value=saved("chi", "p:3,n:1,g:1"))
    with col2:
        t_text = st.text_input("t (a/b)", value=saved("t", "10/9"))
        evaluator = st.selectbox("Evaluator", ["cases", "bruteforce"])

    config = RunConfig("orbital-eval", p=int(p), m=int(m), chi=chi_spec, t=t_text, evaluator=evaluator)
    try:
        place = make_place(int(p), int(m), local_character_at(int(p), chi_spec))
        t = parse_rational(t_text)
        if place.n == 0:
            value = eval_orbital_unramified(place, t)
        elif evaluator == "bruteforce":
            value = eval_orbital_bruteforce(place, t)
        else:
            value = eval_orbital_cases(place, t)
        st.caption(f"Place class: {place.classification}, n = {place.n}")
        render_orbital_value(value, vanishing_predicted(place, t))
    except DomainError as e:
        st.error(f"Domain error: {e}")
    except ValueError as e:
        st.error(str(e))
    save_box(config)

elif tool_selection == "Stability Scan":
    st.subheader("Support of the regular orbital sum as the level grows")
    col1, col2, col3 = st.columns(3)
    with col1:
        q = st.selectbox("Modulus q", sorted(DEFAULT_KRONECKER), index=2)
        chi_spec = st.text_input("Character override (blank: Kronecker default)", value=saved("chi", ""))
    with col2:
        m_min = st.number_input("Smallest M", min_value=1, value=int(saved("m_min", 1)), step=1)
        m_max = st.number_input("Largest M", min_value=1, value=int(saved("m_max", 60)), step=1)
    with col3:
        umax = st.text_input("U_max (a/b)", value=saved("umax", "1"))
        rule = st.selectbox("Sigma+ filter", [SHARP, LATTICE])

    config = RunConfig("stability-scan", q=int(q), chi=chi_spec or None, m_min=int(m_min), m_max=int(m_max),
                       umax=umax, sigma_plus_rule=rule)
    if st.button("Run scan"):
        try:
            chi = character_from_spec(chi_spec) if chi_spec else kronecker_character(DEFAULT_KRONECKER[int(q)])
            report = stability_threshold_scan(chi, range(int(m_min), int(m_max) + 1), parse_rational(umax), rule)
            frame = report.as_report().to_frame()
            st.dataframe(frame, use_container_width=True)
            classes = report.summary["classes"]
            cols = st.columns(max(1, len(classes)))
            for col, (g, info) in zip(cols, classes.items()):
                with col:
                    st.metric(f"gcd = {g}: last non-empty M", info["empirical_threshold"])
                    st.caption(f"bound q^2 gcd U_max = {info['bound']}")
                    if info["monotone"]:
                        st.success("Monotone")
                    else:
                        st.error("Not monotone")
        except ValueError as e:
            st.error(str(e))
    save_box(config)

elif tool_selection == "Small Cell & Dual Kernel":
    st.subheader("Irregular local terms")
    col1, col2 = st.columns(2)
    with col1:
        p = st.number_input("Prime p", min_value=2, value=int(saved("p", 5)), step=1)
        m = st.number_input("Level exponent m", min_value=0, value=int(saved("m", 1)), step=1)
        chi_spec = st.text_input("Character", value=saved("chi", "p:5,n:1,g:1"))
    with col2:
        e_x = st.number_input("e_p(x)", value=int(saved("e_x", 0)), step=1)
        s_text = st.text_input("s (a/b)", value=saved("s", "1/2"))

    config = RunConfig("smallcell", p=int(p), m=int(m), chi=chi_spec, e_x=int(e_x), s=s_text)
    try:
        place = make_place(int(p), int(m), local_character_at(int(p), chi_spec))
        small = small_cell_local_eval(place, int(e_x), parse_rational(s_text))
        col1, col2 = st.columns(2)
        with col1:
            st.metric("Small cell", f"{small.to_complex().real:.12g}")
        with col2:
            if place.n >= 1:
                dual = dual_kernel_eval(place, int(e_x)).to_complex()
                st.metric("Dual kernel", f"{dual.real:.12g} {dual.imag:+.3g}i")
            else:
                st.info("Dual kernel needs a ramified place")
    except ValueError as e:
        st.error(str(e))
    save_box(config)

elif tool_selection == "Twisted L-values":
    st.subheader("Central values L(1/2, f x chi) and their second moment")
    col1, col2 = st.columns(2)
    with col1:
        labels = st.multiselect("Newforms (eta products)", list(SCAN_LABELS), default=list(SCAN_LABELS))
        count = st.number_input("Coefficients K", min_value=50, value=int(saved("count", 400)), step=50)
    with col2:
        chars = st.multiselect("Characters", list(MOMENT_CHARACTERS), default=list(MOMENT_CHARACTERS))
        threshold_c = st.number_input("Threshold constant c", min_value=0.0, value=float(saved("threshold_c", 1.0)))

    config = RunConfig("moment", labels=labels, count=int(count), threshold_c=float(threshold_c))
    if st.button("Compute"):
        try:
            forms = [newform_from_eta(label, int(count)) for label in labels]
            report = moment_scan(forms, [(c, character_from_spec(c)) for c in chars], float(threshold_c))
            st.dataframe(report.to_frame(), use_container_width=True)
            for key, info in report.summary["families"].items():
                st.metric(key, f"S = {info['S']:.6g}", f"C = {info['fitted_constant']:.4g}")
        except ValueError as e:
            st.error(str(e))
    save_box(config)
