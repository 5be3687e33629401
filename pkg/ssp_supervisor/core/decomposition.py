# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Agent:
    name: str
    places: tuple
    transitions: tuple
    waiting_place: str


@dataclass(frozen=True)
class SspDecomposition:
    agents: tuple = ()
    buffers: tuple = ()

    def agent(self, name):
        for agent in self.agents:
            if agent.name == name:
                return agent
        raise KeyError(name)

    def agent_of_transition(self, transition):
        for agent in self.agents:
            if transition in agent.transitions:
                return agent
        return None

    def agent_of_place(self, place):
        for agent in self.agents:
            if place in agent.places:
                return agent
        return None


@dataclass
class NetDocument:
    net: object
    initial_marking: tuple
    decomposition: SspDecomposition = None
    metadata: dict = field(default_factory=dict)
    name: str = "net"
