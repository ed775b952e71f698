from .runner import (CASE_NAMES, CaseResult, CYRILLIC_SNP, DEPLOYER,
                     case_genesis, corpus_dir, golden_dir, load_contract,
                     load_golden, run_case, scenario_dir)

__all__ = [
    "CASE_NAMES", "CaseResult", "CYRILLIC_SNP", "DEPLOYER", "case_genesis",
    "corpus_dir", "golden_dir", "load_contract", "load_golden", "run_case",
    "scenario_dir",
]
