from .types import (Account, Address, Block, CREATE, ETHER, OBSERVED_POST_LONDON_FLOOR_WEI,
                    Receipt, SHANNON, Transaction, WorldState, contract_address, digest)
from .state import (BlockParams, Chain, StateSnapshot, apply_transaction,
                    mine_block, restore, snapshot)
from .genesis import dump_state, genesis_chain, load_genesis, params_from_json

__all__ = [
    "Account", "Address", "Block", "CREATE", "ETHER", "SHANNON",
    "OBSERVED_POST_LONDON_FLOOR_WEI", "Receipt", "Transaction", "WorldState",
    "contract_address", "digest", "BlockParams", "Chain", "StateSnapshot",
    "apply_transaction", "mine_block", "restore", "snapshot",
    "dump_state", "genesis_chain", "load_genesis", "params_from_json",
]
