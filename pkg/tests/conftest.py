import logging

import pytest


@pytest.fixture(autouse=True)
def _quiet_reward_warnings(caplog):
    # The clamp-risk configuration warning is exercised explicitly in
    # test_rewards; everywhere else it is expected noise.
    logging.getLogger("dagsim.rewards").setLevel(logging.ERROR)
    yield
    logging.getLogger("dagsim.rewards").setLevel(logging.NOTSET)
